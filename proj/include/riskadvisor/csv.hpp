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

#ifndef RISKADVISOR_CSV_HPP_
#define RISKADVISOR_CSV_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "riskadvisor/common.hpp"

namespace riskadvisor {

enum class CsvErrorCode {
  kMissingFile,
  kMissingColumn,
  kUnparseableCell,
  kEmptyDataset,
  kRaggedRow,
  kInvalidValue,
};

class CsvError : public Error {
 public:
  CsvError(CsvErrorCode code, const std::string& what, std::size_t row, std::string column)
      : Error(code == CsvErrorCode::kMissingFile ? ErrorKind::kIo : ErrorKind::kData, what),
        code_(code),
        row_(row),
        column_(std::move(column)) {}

  CsvErrorCode code() const noexcept { return code_; }
  /// 1-based data row (0 when the error is not tied to a row).
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  CsvErrorCode code_;
  std::size_t row_;
  std::string column_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws kMissingColumn if absent.
  std::size_t column(const std::string& name, const std::string& source) const;
};

/// RFC 4180 style: comma separated, double-quote escaping, blank lines skipped.
CsvTable ReadCsvFile(const std::string& path);
CsvTable ParseCsv(const std::string& text, const std::string& source);

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& cells);

/// Writes to a sibling temporary and renames it into place.
void WriteFileAtomic(const std::string& path, const std::string& contents);
std::string ReadFile(const std::string& path);

}  // namespace riskadvisor

#endif  // RISKADVISOR_CSV_HPP_
