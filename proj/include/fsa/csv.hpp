#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace fsa::csv {

// %.17g rendering: enough digits to round-trip any double, stable across
// runs and platforms, '.' decimal separator.
std::string format_double(double v);

// Comma-separated writer with a fixed column count, LF line endings, no
// quoting (string fields must not contain separators).  Always truncates an
// existing file so reruns overwrite byte for byte.
class Writer {
  public:
    Writer(const std::string& path, const std::vector<std::string>& header);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    Writer& field(double v);
    Writer& field(long v);
    Writer& field(const std::string& v);
    void end_row();

    // Flushes and verifies the stream; rows must be complete.
    void close();

  private:
    void raw(const std::string& s);

    std::ofstream out_;
    std::string path_;
    std::size_t columns_ = 0;
    std::size_t fields_in_row_ = 0;
    bool closed_ = false;
};

}  // namespace fsa::csv
