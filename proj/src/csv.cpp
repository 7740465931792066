#include "bslab/csv.hpp"

#include <cstdio>

#include "bslab/errors.hpp"

namespace bslab::csv {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(int v) { return std::to_string(v); }

std::string fmt(bool v) { return v ? "true" : "false"; }

Writer::Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void Writer::line(const std::string& s) {
    out_ << s << '\n';
    if (!out_) throw std::runtime_error("write failure");
}

}  // namespace bslab::csv
