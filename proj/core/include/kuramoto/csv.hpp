#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace kuramoto {

/// CSV emitter. Floating-point cells use 17 significant digits so files
/// round-trip bit-exactly.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns,
            const std::string& manifest_id = {});

  void cell(double v);
  void cell(int v);
  void cell(std::int64_t v);
  void cell(std::uint64_t v);
  void cell(const std::string& v);
  void end_row();

  template <typename... Ts>
  void row(Ts&&... vs) {
    (cell(std::forward<Ts>(vs)), ...);
    end_row();
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
  void sep();
};

std::string format_double(double v);  // %.17g

}  // namespace kuramoto
