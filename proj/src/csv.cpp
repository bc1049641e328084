#include "fsa/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace fsa::csv {

std::string format_double(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    if (len < 0 || len >= static_cast<int>(sizeof buf))
        throw std::runtime_error("format_double: snprintf failed");
    return std::string(buf, static_cast<std::size_t>(len));
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
    if (header.empty()) throw std::invalid_argument("csv::Writer: empty header");
    out_.open(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out_) throw std::runtime_error("csv::Writer: cannot open " + path);
    for (const auto& h : header) field(h);
    end_row();
}

Writer::~Writer() {
    // Best effort on abnormal paths; normal call sites close() explicitly.
    if (!closed_) out_.close();
}

void Writer::raw(const std::string& s) {
    if (closed_) throw std::logic_error("csv::Writer: write after close");
    if (fields_in_row_ >= columns_)
        throw std::logic_error("csv::Writer: too many fields in row (" + path_ + ")");
    if (fields_in_row_ > 0) out_ << ',';
    out_ << s;
    ++fields_in_row_;
}

Writer& Writer::field(double v) {
    raw(format_double(v));
    return *this;
}

Writer& Writer::field(long v) {
    raw(std::to_string(v));
    return *this;
}

Writer& Writer::field(const std::string& v) {
    if (v.find_first_of(",\n\r") != std::string::npos)
        throw std::invalid_argument("csv::Writer: field contains a separator: " + v);
    raw(v);
    return *this;
}

void Writer::end_row() {
    if (fields_in_row_ != columns_)
        throw std::logic_error("csv::Writer: incomplete row (" + path_ + ")");
    out_ << '\n';
    fields_in_row_ = 0;
}

void Writer::close() {
    if (closed_) return;
    if (fields_in_row_ != 0) throw std::logic_error("csv::Writer: close mid-row (" + path_ + ")");
    out_.flush();
    if (!out_) throw std::runtime_error("csv::Writer: write failed for " + path_);
    out_.close();
    closed_ = true;
}

}  // namespace fsa::csv
