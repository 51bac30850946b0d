// Copyright 2026 The Risk Advisor Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "riskadvisor/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace riskadvisor {

std::size_t CsvTable::column(const std::string& name, const std::string& source) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw CsvError(CsvErrorCode::kMissingColumn, source + ": missing column '" + name + "'", 0,
                   name);
  }
  return static_cast<std::size_t>(it - header.begin());
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CsvError(CsvErrorCode::kMissingFile, "cannot open '" + path + "'", 0, "");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable ReadCsvFile(const std::string& path) { return ParseCsv(ReadFile(path), path); }

CsvTable ParseCsv(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;
  auto end_record = [&] {
    record.push_back(std::move(cell));
    cell.clear();
    const bool blank = record.size() == 1 && record[0].empty() && !cell_started;
    if (!blank) records.push_back(std::move(record));
    record.clear();
    cell_started = false;
  };

  std::size_t i = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        cell_started = true;
        break;
      case ',':
        record.push_back(std::move(cell));
        cell.clear();
        cell_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        cell.push_back(ch);
        cell_started = true;
    }
  }
  if (cell_started || !cell.empty() || !record.empty()) end_record();

  if (records.empty()) {
    throw CsvError(CsvErrorCode::kEmptyDataset, source + ": missing header row", 0, "");
  }
  CsvTable table;
  table.header = std::move(records.front());
  for (auto& h : table.header) {
    auto b = h.find_first_not_of(" \t");
    auto e = h.find_last_not_of(" \t");
    h = b == std::string::npos ? std::string() : h.substr(b, e - b + 1);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw CsvError(CsvErrorCode::kRaggedRow,
                     source + ": row " + std::to_string(r) + " has " +
                         std::to_string(records[r].size()) + " cells, header has " +
                         std::to_string(table.header.size()),
                     r, "");
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n\r") != std::string::npos) {
      out << '"';
      for (char ch : c) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << c;
    }
  }
  out << '\n';
}

void WriteFileAtomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kIo, "cannot write '" + tmp + "'");
    out << contents;
    out.flush();
    if (!out) Fail(ErrorKind::kIo, "short write to '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::remove(tmp.c_str());
    Fail(ErrorKind::kIo, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

}  // namespace riskadvisor
