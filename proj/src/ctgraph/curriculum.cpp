#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

#include "maskrl/ctgraph.hpp"
#include "maskrl/errors.hpp"

namespace maskrl::ctgraph {

namespace {

std::vector<TaskSpec> leaves(const Config& c, const std::vector<long>& which) {
  std::vector<TaskSpec> out;
  for (long leaf : which) out.push_back(TaskSpec::for_leaf(c, leaf));
  return out;
}

std::vector<long> first_n(long n) {
  std::vector<long> v;
  for (long i = 0; i < n; ++i) v.push_back(i);
  return v;
}

// "b2d3:0,1,5" → tasks for leaves 0, 1 and 5 of the (2, 3) graph.
std::vector<TaskSpec> parse_custom(const std::string& body, std::uint64_t seed) {
  std::vector<TaskSpec> out;
  std::stringstream groups(body);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    const auto colon = group.find(':');
    const std::string shape = group.substr(0, colon);
    int b = 0, d = 0;
    char tail = 0;
    if (std::sscanf(shape.c_str(), "b%dd%d%c", &b, &d, &tail) != 2) {
      throw ConfigError("custom curriculum: bad graph shape '" + shape + "' (expected bNdM)");
    }
    Config c{b, d, seed};
    c.validate();
    if (colon == std::string::npos) {
      for (auto& t : leaves(c, first_n(c.leaf_count()))) out.push_back(std::move(t));
      continue;
    }
    std::stringstream ids(group.substr(colon + 1));
    std::string id;
    while (std::getline(ids, id, ',')) {
      try {
        std::size_t used = 0;
        const long leaf = std::stol(id, &used);
        if (used != id.size()) throw std::invalid_argument(id);
        out.push_back(TaskSpec::for_leaf(c, leaf));
      } catch (const std::logic_error&) {
        throw ConfigError("custom curriculum: bad leaf index '" + id + "'");
      }
    }
  }
  if (out.empty()) throw ConfigError("custom curriculum '" + body + "' has no tasks");
  return out;
}

}  // namespace

std::vector<TaskSpec> make_curriculum(const std::string& name, std::uint64_t seed) {
  const Config ct4{2, 2, seed};
  const Config ct8{2, 3, seed};
  if (name == "CT4") return leaves(ct4, first_n(4));
  if (name == "CT8") return leaves(ct8, first_n(8));
  if (name == "CT12") {
    std::vector<TaskSpec> out;
    for (long i = 0; i < 8; ++i) {
      if (i < 4) out.push_back(TaskSpec::for_leaf(ct4, i));
      out.push_back(TaskSpec::for_leaf(ct8, i));
    }
    return out;
  }
  if (name == "CT8_MULTI_DEPTH") {
    std::vector<TaskSpec> out;
    for (int d = 2; d <= 5; ++d) {
      for (auto& t : leaves(Config{2, d, seed}, {0, 1})) out.push_back(std::move(t));
    }
    return out;
  }
  const std::string prefix = "custom:";
  if (name.rfind(prefix, 0) == 0) return parse_custom(name.substr(prefix.size()), seed);
  throw ConfigError("unknown curriculum '" + name + "' (CT4, CT8, CT12, CT8_MULTI_DEPTH or custom:...)");
}

}  // namespace maskrl::ctgraph
