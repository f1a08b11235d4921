#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "invmine/lang.hpp"

namespace support {

inline std::string corpus_path(const std::string& name) {
  return std::string(INVMINE_CORPUS_DIR) + "/" + name + ".mpl";
}

inline std::string read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::shared_ptr<const invmine::ProgramModel> corpus(const std::string& name) {
  return invmine::parse(read(corpus_path(name)));
}

inline const char* kCorpus[] = {"peterson2", "toggle", "producer-consumer",
                                "dining-philosophers-3", "toy-leader-election-3"};

}  // namespace support
