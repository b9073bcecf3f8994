#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "afl/parser.h"

namespace afl::testing {

inline std::string corpus_path(const std::string &rel)
{
  return std::string(AFL_CORPUS_DIR) + "/" + rel;
}

inline std::string read_file(const std::string &path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Formula load(const std::string &rel)
{
  return parse(read_file(corpus_path(rel)));
}

}  // namespace afl::testing
