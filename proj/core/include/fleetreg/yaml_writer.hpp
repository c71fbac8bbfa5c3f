#pragma once

#include <sstream>
#include <string>

namespace fleetreg {

// Minimal canonical YAML emitter: fixed key order is the caller's job, this
// class only handles indentation (two spaces) and scalar quoting. yaml-cpp is
// used for parsing; emission is hand-rolled so equal values always produce
// identical bytes.
class YamlWriter {
 public:
  void line(int depth, const std::string& text) {
    for (int i = 0; i < depth; ++i) out_ << "  ";
    out_ << text << '\n';
  }

  std::string str() const { return out_.str(); }

  static std::string quote(const std::string& s);

 private:
  std::ostringstream out_;
};

}  // namespace fleetreg
