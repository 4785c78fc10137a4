#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "nsctl/app.hpp"
#include "nsctl/error.hpp"

namespace nsctl::app {
namespace {

using nlohmann::json;

struct NameEntry {
  Command command;
  const char* name;
};

constexpr NameEntry kNames[] = {
    {Command::saturate, "saturate"},         {Command::closure, "closure"},
    {Command::simulate, "simulate"},         {Command::steer, "steer"},
    {Command::extend_verify, "extend-verify"}, {Command::sphere_closure, "sphere-closure"},
    {Command::export_table, "export-table"},
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  for (const auto& e : kNames)
    if (name == e.name) return e.command;
  return std::nullopt;
}

const char* to_string(Command c) {
  for (const auto& e : kNames)
    if (e.command == c) return e.name;
  return "?";
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& e : kNames) out.emplace_back(e.name);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::io, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io, "short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::io, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

json parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto issues = run_config_validator().validate(doc);
  if (!issues.empty()) throw ConfigError("config violates the run-config schema", std::move(issues));
  return doc;
}

LoadedConfig load_config(const std::filesystem::path& path, const std::optional<std::uint64_t>& seed,
                         const std::string& out_dir) {
  const std::string text = read_file(path);
  LoadedConfig c;
  c.doc = parse_config(text);
  c.sha256 = sha256_hex(text);
  c.seed = seed ? *seed : c.doc.value("seed", std::uint64_t{0});
  if (!out_dir.empty()) c.out_dir = out_dir;
  else c.out_dir = c.doc.value("output_dir", std::string("."));
  return c;
}

std::shared_ptr<const StructureTable> build_table(const json& cfg) {
  const Domain d = domain_from_string(cfg.at("domain").get<std::string>());
  const json table = cfg.value("table", json::object());
  auto need = [&](const char* key) {
    if (!table.contains(key))
      throw ConfigError(std::string("table.") + key + " is required for domain " + to_string(d),
                        {{"/table", std::string("missing '") + key + "'"}});
    return table.at(key).get<int>();
  };
  auto forbid = [&](const char* key) {
    if (table.contains(key))
      throw ConfigError(std::string("table.") + key + " does not apply to domain " + to_string(d),
                        {{std::string("/table/") + key, "not allowed here"}});
  };
  switch (d) {
    case Domain::torus:
      forbid("max_degree");
      forbid("a");
      forbid("b");
      return std::make_shared<const StructureTable>(StructureTable::torus(need("box")));
    case Domain::rectangle: {
      forbid("max_degree");
      Geometry g;
      g.a = table.value("a", g.a);
      g.b = table.value("b", g.b);
      return std::make_shared<const StructureTable>(StructureTable::rectangle(need("box"), g));
    }
    case Domain::sphere:
      forbid("box");
      forbid("a");
      forbid("b");
      return std::make_shared<const StructureTable>(StructureTable::sphere(need("max_degree")));
  }
  throw Error(ErrorKind::configuration, "unknown domain");
}

namespace {

std::size_t table_index(const StructureTable& t, const std::string& label, const std::string& where) {
  ModeId m;
  try {
    m = ModeId::parse(label);
  } catch (const Error& e) {
    throw ConfigError(e.what(), {{where, e.what()}});
  }
  if (m.domain != t.domain())
    throw ConfigError("mode " + label + " does not belong to domain " + to_string(t.domain()),
                      {{where, "wrong domain"}});
  auto i = t.index_of(m);
  if (!i) throw ConfigError("mode " + label + " is not in the structure table", {{where, "outside the table"}});
  return *i;
}

}  // namespace

GalerkinSystem build_system(const json& cfg, std::shared_ptr<const StructureTable> table) {
  const auto& t = *table;
  std::vector<std::size_t> observed;
  const json obs = cfg.value("observed", json::object());
  if (obs.contains("box") && obs.contains("modes"))
    throw ConfigError("observed: give either box or modes", {{"/observed", "box and modes are exclusive"}});
  if (obs.contains("modes")) {
    const auto& modes = obs.at("modes");
    for (std::size_t i = 0; i < modes.size(); ++i)
      observed.push_back(table_index(t, modes[i].get<std::string>(), "/observed/modes/" + std::to_string(i)));
  } else {
    observed = modes_within(t, obs.value("box", 0));
  }
  if (observed.empty()) throw ConfigError("observed mode set is empty", {{"/observed", "empty mode set"}});

  std::vector<std::size_t> controlled;
  const json ctl = cfg.value("controlled", json::array());
  const std::set<std::size_t> obs_set(observed.begin(), observed.end());
  for (std::size_t i = 0; i < ctl.size(); ++i) {
    const std::string where = "/controlled/" + std::to_string(i);
    const auto idx = table_index(t, ctl[i].get<std::string>(), where);
    if (!obs_set.count(idx))
      throw ConfigError("controlled mode " + ctl[i].get<std::string>() + " is not observed",
                        {{where, "controlled modes must be observed"}});
    controlled.push_back(idx);
  }
  return GalerkinSystem(std::move(table), std::move(observed), std::move(controlled), cfg.value("nu", 0.0));
}

std::vector<double> state_from_map(const GalerkinSystem& sys, const json& map, const char* what) {
  std::vector<double> q(sys.dimension(), 0.0);
  for (const auto& [label, value] : map.items()) {
    const std::string where = std::string(what) + "/" + label;
    const auto idx = table_index(sys.table(), label, where);
    const auto local = sys.local_index(idx);
    if (!local) throw ConfigError("state entry " + label + " is not an observed mode", {{where, "not observed"}});
    q[*local] = value.get<double>();
  }
  return q;
}

std::string trajectory_csv(const GalerkinSystem& sys, const Trajectory& traj, const std::string& comment) {
  std::string out = "# " + comment + "\n";
  out += "t";
  for (const auto& l : sys.labels()) out += ",q_" + l;
  out += ",E,Z\n";
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    out += format_double(traj.times[r]);
    for (double v : traj.states[r]) out += "," + format_double(v);
    out += "," + format_double(traj.diagnostics[r].energy) + "," + format_double(traj.diagnostics[r].enstrophy);
    out += "\n";
  }
  return out;
}

}  // namespace nsctl::app
