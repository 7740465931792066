#pragma once

#include <fstream>
#include <string>

namespace bslab::csv {

// Round-trip-safe, byte-stable double formatting for all emitted files.
std::string fmt(double v);
std::string fmt(int v);
std::string fmt(bool v);

// Line writer with LF endings and a trailing newline.
class Writer {
  public:
    explicit Writer(const std::string& path);
    void line(const std::string& s);

  private:
    std::ofstream out_;
};

}  // namespace bslab::csv
