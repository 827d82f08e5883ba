#include "empcnet/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "json_eigen.hpp"
#include "empcnet/netenc.hpp"

#ifndef EMPCNET_VERSION
#define EMPCNET_VERSION "0.0.0"
#endif

namespace empcnet {

using nlohmann::json;

std::string_view library_version() { return EMPCNET_VERSION; }

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

namespace {

constexpr const char* kSolutionFormat = "empcnet.explicit_solution";
constexpr const char* kNetworkFormat = "empcnet.encoded_network";
constexpr int kSchemaVersion = 1;

json box_to_json(const DomainBox& box) {
  return {{"lower", detail::to_json(box.lower)}, {"upper", detail::to_json(box.upper)}};
}

DomainBox box_from_json(const json& j) {
  DomainBox box{detail::vec_from_json(j.at("lower")), detail::vec_from_json(j.at("upper"))};
  box.validate();
  return box;
}

json solution_body(const ExplicitSolution& s) {
  json regions = json::array();
  for (const auto& r : s.regions) {
    regions.push_back({{"H", detail::to_json(r.H)},
                       {"k", detail::to_json(r.k)},
                       {"F", detail::to_json(r.F)},
                       {"g", detail::to_json(r.g)},
                       {"active_set", r.active_set},
                       {"chebyshev_center", detail::to_json(r.chebyshev_center)},
                       {"chebyshev_radius", r.chebyshev_radius}});
  }
  return {{"n", s.n},
          {"m", s.m},
          {"horizon", s.horizon},
          {"domain_box", box_to_json(s.domain)},
          {"regions", std::move(regions)}};
}

void check_format(const json& doc, const char* expected) {
  if (!doc.is_object() || doc.value("format", std::string{}) != expected) {
    throw ConfigError(std::string("document is not a ") + expected);
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) {
    throw ConfigError("unsupported schema_version");
  }
}

json provenance_json(const std::optional<Provenance>& p) {
  if (!p) return nullptr;
  return {{"config_digest", p->config_digest}, {"seed", p->seed}};
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string solution_to_text(const ExplicitSolution& solution,
                             const std::optional<Provenance>& provenance) {
  json doc = {{"format", kSolutionFormat},
              {"schema_version", kSchemaVersion},
              {"tool_version", library_version()},
              {"provenance", provenance_json(provenance)},
              {"solution", solution_body(solution)}};
  return doc.dump(1) + "\n";
}

ExplicitSolution solution_from_text(const std::string& text) {
  const json doc = parse(text);
  check_format(doc, kSolutionFormat);
  try {
    const json& body = doc.at("solution");
    ExplicitSolution s;
    s.n = body.at("n").get<int>();
    s.m = body.at("m").get<int>();
    s.horizon = body.at("horizon").get<int>();
    s.domain = box_from_json(body.at("domain_box"));
    for (const auto& jr : body.at("regions")) {
      CriticalRegion r;
      r.H = detail::mat_from_json(jr.at("H"), s.n);
      r.k = detail::vec_from_json(jr.at("k"));
      r.F = detail::mat_from_json(jr.at("F"), s.n);
      r.g = detail::vec_from_json(jr.at("g"));
      r.active_set = jr.at("active_set").get<std::vector<int>>();
      r.chebyshev_center = detail::vec_from_json(jr.at("chebyshev_center"));
      r.chebyshev_radius = jr.at("chebyshev_radius").get<double>();
      if (r.H.rows() != r.k.size() || r.F.rows() != s.m * s.horizon || r.g.size() != r.F.rows()) {
        throw ConfigError("region dimensions are inconsistent");
      }
      s.regions.push_back(std::move(r));
    }
    if (s.domain.dim() != s.n) throw ConfigError("domain box dimension mismatch");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corrupt solution document: ") + e.what());
  }
}

std::string solution_digest(const ExplicitSolution& solution) {
  return fnv1a_hex(solution_body(solution).dump());
}

std::string network_to_text(const EncodedNetwork& network,
                            const std::optional<Provenance>& provenance) {
  json subnets = json::array();
  for (const auto& s : network.subnets) {
    subnets.push_back({{"index", s.index}, {"W", detail::to_json(s.W)}, {"b", detail::to_json(s.b)}});
  }
  const LocationNet& loc = network.location;
  json doc = {{"format", kNetworkFormat},
              {"schema_version", kSchemaVersion},
              {"tool_version", library_version()},
              {"provenance", provenance_json(provenance)},
              {"source_hash", network.source_hash},
              {"domain_box", box_to_json(network.domain)},
              {"location",
               {{"W1", detail::to_json(loc.W1)},
                {"b1", detail::to_json(loc.b1)},
                {"block_sizes", loc.block_sizes},
                {"b2", detail::to_json(loc.b2)}}},
              {"subnets", std::move(subnets)}};
  return doc.dump(1) + "\n";
}

EncodedNetwork network_from_text(const std::string& text) {
  const json doc = parse(text);
  check_format(doc, kNetworkFormat);
  try {
    EncodedNetwork net;
    net.source_hash = doc.at("source_hash").get<std::string>();
    net.domain = box_from_json(doc.at("domain_box"));
    const int n = net.domain.dim();
    const json& jl = doc.at("location");
    LocationNet& loc = net.location;
    loc.W1 = detail::mat_from_json(jl.at("W1"), n);
    loc.b1 = detail::vec_from_json(jl.at("b1"));
    loc.block_sizes = jl.at("block_sizes").get<std::vector<int>>();
    loc.b2 = detail::vec_from_json(jl.at("b2"));
    // W2 is fully determined by the block structure.
    const auto regions = static_cast<Eigen::Index>(loc.block_sizes.size());
    loc.W2 = Mat::Zero(regions, loc.W1.rows());
    Eigen::Index offset = 0;
    for (Eigen::Index i = 0; i < regions; ++i) {
      const int nc = loc.block_sizes[static_cast<std::size_t>(i)];
      if (nc < 0 || offset + nc > loc.W1.rows()) throw ConfigError("block sizes exceed W1 rows");
      loc.W2.block(i, offset, 1, nc).setOnes();
      offset += nc;
    }
    if (offset != loc.W1.rows() || loc.b1.size() != loc.W1.rows() || loc.b2.size() != regions) {
      throw ConfigError("location network dimensions are inconsistent");
    }
    for (const auto& js : doc.at("subnets")) {
      PolicySubnet s;
      s.index = js.at("index").get<int>();
      s.W = detail::mat_from_json(js.at("W"), n);
      s.b = detail::vec_from_json(js.at("b"));
      if (s.b.size() != s.W.rows()) throw ConfigError("subnet dimensions are inconsistent");
      net.subnets.push_back(std::move(s));
    }
    if (static_cast<Eigen::Index>(net.subnets.size()) != regions) {
      throw ConfigError("subnet count does not match location network");
    }
    return net;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corrupt network document: ") + e.what());
  }
}

LtiProblem problem_from_text(const std::string& text) {
  return detail::problem_from_json(parse(text));
}

std::string problem_to_text(const LtiProblem& p) {
  return detail::problem_to_json(p).dump(1) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace empcnet
