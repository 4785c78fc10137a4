#include "nsctl/schema.hpp"

#include <cmath>
#include <regex>
#include <set>

#include "nsctl/error.hpp"

namespace nsctl {
namespace {

using nlohmann::json;

const std::set<std::string> kKnown{"$schema", "$id", "$defs", "$ref", "title", "description", "type",
                                   "enum", "properties", "required", "additionalProperties", "items",
                                   "minItems", "maxItems", "uniqueItems", "minimum", "maximum",
                                   "exclusiveMinimum", "minLength", "pattern", "oneOf"};

void audit(const json& s, const std::string& where) {
  if (s.is_boolean()) return;
  if (!s.is_object()) throw Error(ErrorKind::configuration, "schema node at " + where + " is not an object");
  for (const auto& [k, v] : s.items()) {
    if (!kKnown.count(k)) throw Error(ErrorKind::configuration, "unsupported schema keyword '" + k + "' at " + where);
    if (k == "properties" || k == "$defs")
      for (const auto& [name, sub] : v.items()) audit(sub, where + "/" + k + "/" + name);
    if (k == "items" || (k == "additionalProperties" && v.is_object())) audit(v, where + "/" + k);
    if (k == "oneOf")
      for (std::size_t i = 0; i < v.size(); ++i) audit(v[i], where + "/oneOf/" + std::to_string(i));
  }
}

std::string escape_pointer(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    return false;
  }
  return false;
}

}  // namespace

SchemaValidator::SchemaValidator(json schema) : root_(std::move(schema)) { audit(root_, "#"); }

const json& SchemaValidator::resolve(const std::string& ref) const {
  const std::string prefix = "#/$defs/";
  if (ref.rfind(prefix, 0) != 0) throw Error(ErrorKind::configuration, "unsupported $ref '" + ref + "'");
  const auto& defs = root_.at("$defs");
  auto it = defs.find(ref.substr(prefix.size()));
  if (it == defs.end()) throw Error(ErrorKind::configuration, "dangling $ref '" + ref + "'");
  return *it;
}

std::vector<SchemaIssue> SchemaValidator::validate(const json& instance) const {
  std::vector<SchemaIssue> out;
  check(root_, instance, "", out);
  return out;
}

void SchemaValidator::check(const json& s, const json& v, const std::string& path,
                            std::vector<SchemaIssue>& out) const {
  const std::string where = path.empty() ? "/" : path;
  if (s.is_boolean()) {
    if (!s.get<bool>()) out.push_back({where, "value not allowed"});
    return;
  }
  if (auto r = s.find("$ref"); r != s.end()) {
    check(resolve(r->get<std::string>()), v, path, out);
    return;
  }
  if (auto t = s.find("type"); t != s.end()) {
    bool ok = false;
    if (t->is_string()) ok = has_type(v, t->get<std::string>());
    else
      for (const auto& alt : *t) ok = ok || has_type(v, alt.get<std::string>());
    if (!ok) {
      out.push_back({where, "expected type " + t->dump()});
      return;
    }
  }
  if (auto e = s.find("enum"); e != s.end()) {
    bool ok = false;
    for (const auto& c : *e) ok = ok || c == v;
    if (!ok) out.push_back({where, "value must be one of " + e->dump()});
  }
  if (auto o = s.find("oneOf"); o != s.end()) {
    std::size_t matches = 0;
    for (const auto& alt : *o) {
      std::vector<SchemaIssue> tmp;
      check(alt, v, path, tmp);
      if (tmp.empty()) ++matches;
    }
    if (matches != 1)
      out.push_back({where, "value matches " + std::to_string(matches) + " of the oneOf alternatives (need 1)"});
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (auto m = s.find("minimum"); m != s.end() && d < m->get<double>())
      out.push_back({where, "must be >= " + m->dump()});
    if (auto m = s.find("maximum"); m != s.end() && d > m->get<double>())
      out.push_back({where, "must be <= " + m->dump()});
    if (auto m = s.find("exclusiveMinimum"); m != s.end() && !(d > m->get<double>()))
      out.push_back({where, "must be > " + m->dump()});
  }
  if (v.is_string()) {
    const auto& str = v.get_ref<const std::string&>();
    if (auto m = s.find("minLength"); m != s.end() && str.size() < m->get<std::size_t>())
      out.push_back({where, "string shorter than " + m->dump()});
    if (auto p = s.find("pattern"); p != s.end() && !std::regex_search(str, std::regex(p->get<std::string>())))
      out.push_back({where, "'" + str + "' does not match " + p->dump()});
  }
  if (v.is_array()) {
    if (auto m = s.find("minItems"); m != s.end() && v.size() < m->get<std::size_t>())
      out.push_back({where, "needs at least " + m->dump() + " items"});
    if (auto m = s.find("maxItems"); m != s.end() && v.size() > m->get<std::size_t>())
      out.push_back({where, "allows at most " + m->dump() + " items"});
    if (auto u = s.find("uniqueItems"); u != s.end() && u->get<bool>()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j)
          if (v[i] == v[j]) out.push_back({path + "/" + std::to_string(j), "duplicate of item " + std::to_string(i)});
    }
    if (auto it = s.find("items"); it != s.end())
      for (std::size_t i = 0; i < v.size(); ++i) check(*it, v[i], path + "/" + std::to_string(i), out);
  }
  if (v.is_object()) {
    if (auto r = s.find("required"); r != s.end())
      for (const auto& name : *r)
        if (!v.contains(name.get<std::string>()))
          out.push_back({where, "missing required property '" + name.get<std::string>() + "'"});
    const json* props = nullptr;
    if (auto p = s.find("properties"); p != s.end()) props = &*p;
    const auto extra = s.find("additionalProperties");
    for (const auto& [key, val] : v.items()) {
      const std::string sub = path + "/" + escape_pointer(key);
      if (props && props->contains(key)) check(props->at(key), val, sub, out);
      else if (extra != s.end()) {
        if (extra->is_boolean() && !extra->get<bool>()) out.push_back({sub, "unknown property '" + key + "'"});
        else if (extra->is_object()) check(*extra, val, sub, out);
      }
    }
  }
}

const std::string& run_config_schema_text() {
  static const std::string text =
#include "nsctl_schema.inc"
      ;
  return text;
}

const SchemaValidator& run_config_validator() {
  static const SchemaValidator v(json::parse(run_config_schema_text()));
  return v;
}

}  // namespace nsctl
