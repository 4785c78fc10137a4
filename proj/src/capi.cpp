#include "nsctl/nsctl.h"

#include <cstring>
#include <memory>
#include <string>

#include "nsctl/app.hpp"
#include "nsctl/error.hpp"
#include "nsctl/galerkin.hpp"

struct nsctl_table {
  std::shared_ptr<const nsctl::StructureTable> table;
};

struct nsctl_system {
  std::unique_ptr<nsctl::GalerkinSystem> sys;
};

namespace {

using nlohmann::json;

thread_local std::string g_error;
thread_local std::string g_report;

nsctl_status status_for(nsctl::ErrorKind k) {
  return k == nsctl::ErrorKind::numerical ? NSCTL_ERR_NUMERICAL : NSCTL_ERR_VALIDATION;
}

nsctl_status fail(nsctl_status s, const char* kind, const std::string& message) {
  g_error = json{{"error", {{"kind", kind}, {"status", static_cast<int>(s)}, {"message", message}}}}.dump();
  return s;
}

template <typename F>
nsctl_status guarded(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const nsctl::Error& e) {
    return fail(status_for(e.kind()), nsctl::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail(NSCTL_ERR_NUMERICAL, "internal", e.what());
  }
}

nsctl_status copy_label(const std::string& label, char* buf, size_t len, size_t* needed) {
  if (needed) *needed = label.size() + 1;
  if (!buf) return NSCTL_OK;
  if (len < label.size() + 1) return fail(NSCTL_ERR_BUFFER_TOO_SMALL, "buffer", "label buffer too small");
  std::memcpy(buf, label.c_str(), label.size() + 1);
  return NSCTL_OK;
}

nsctl_status make_table(nsctl::StructureTable t, nsctl_table** out) {
  auto h = std::make_unique<nsctl_table>();
  h->table = std::make_shared<const nsctl::StructureTable>(std::move(t));
  *out = h.release();
  return NSCTL_OK;
}

#define NSCTL_REQUIRE(p) \
  if (!(p)) return fail(NSCTL_ERR_NULL_ARGUMENT, "null_argument", #p " must not be null")

}  // namespace

extern "C" {

const char* nsctl_version(void) { return NSCTL_VERSION; }
const char* nsctl_last_error(void) { return g_error.c_str(); }
const char* nsctl_last_report(void) { return g_report.c_str(); }

const char* nsctl_commands(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : nsctl::app::command_names()) s += (s.empty() ? "" : " ") + n;
    return s;
  }();
  return names.c_str();
}

int nsctl_run(const char* command, const char* config_path, const char* out_dir, const uint64_t* seed) {
  g_error.clear();
  g_report.clear();
  if (!command || !config_path) {
    fail(NSCTL_ERR_VALIDATION, "usage", "command and config path are required");
    return nsctl::app::exit_validation;
  }
  const auto cmd = nsctl::app::parse_command(command);
  if (!cmd) {
    fail(NSCTL_ERR_VALIDATION, "usage", std::string("unknown command '") + command + "'");
    return nsctl::app::exit_validation;
  }
  nsctl::app::RunRequest req;
  req.command = *cmd;
  req.config_path = config_path;
  if (out_dir) req.out_dir = out_dir;
  if (seed) req.seed = *seed;
  try {
    const auto report = nsctl::app::run(req);
    g_report = report.summary.dump();
    if (!report.error.is_null()) g_error = report.error.dump();
    return report.exit_code;
  } catch (const std::exception& e) {
    fail(NSCTL_ERR_NUMERICAL, "internal", e.what());
    return nsctl::app::exit_numerical;
  }
}

nsctl_status nsctl_table_torus(int box, nsctl_table** out) {
  NSCTL_REQUIRE(out);
  return guarded([&] { return make_table(nsctl::StructureTable::torus(box), out); });
}

nsctl_status nsctl_table_rectangle(int box, double a, double b, nsctl_table** out) {
  NSCTL_REQUIRE(out);
  return guarded([&] { return make_table(nsctl::StructureTable::rectangle(box, {a, b}), out); });
}

nsctl_status nsctl_table_sphere(int max_degree, nsctl_table** out) {
  NSCTL_REQUIRE(out);
  return guarded([&] { return make_table(nsctl::StructureTable::sphere(max_degree), out); });
}

nsctl_status nsctl_table_from_json(const char* text, nsctl_table** out) {
  NSCTL_REQUIRE(text);
  NSCTL_REQUIRE(out);
  return guarded([&] {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      return fail(NSCTL_ERR_VALIDATION, "io", std::string("table JSON does not parse: ") + e.what());
    }
    return make_table(nsctl::StructureTable::from_json(doc), out);
  });
}

void nsctl_table_free(nsctl_table* table) { delete table; }

size_t nsctl_table_size(const nsctl_table* table) { return table ? table->table->size() : 0; }

nsctl_status nsctl_table_label(const nsctl_table* table, size_t index, char* buf, size_t len, size_t* needed) {
  NSCTL_REQUIRE(table);
  return guarded([&] {
    if (index >= table->table->size()) return fail(NSCTL_ERR_VALIDATION, "invalid_argument", "mode index out of range");
    return copy_label(table->table->mode(index).label(), buf, len, needed);
  });
}

nsctl_status nsctl_table_eigenvalue(const nsctl_table* table, size_t index, double* out) {
  NSCTL_REQUIRE(table);
  NSCTL_REQUIRE(out);
  if (index >= table->table->size()) return fail(NSCTL_ERR_VALIDATION, "invalid_argument", "mode index out of range");
  *out = table->table->eigenvalues()[index];
  return NSCTL_OK;
}

nsctl_status nsctl_table_index(const nsctl_table* table, const char* label, size_t* out) {
  NSCTL_REQUIRE(table);
  NSCTL_REQUIRE(label);
  NSCTL_REQUIRE(out);
  return guarded([&] {
    const auto m = nsctl::ModeId::parse(label);
    *out = table->table->require_index(m);
    return NSCTL_OK;
  });
}

nsctl_status nsctl_table_coefficient(const nsctl_table* table, size_t i, size_t j, size_t k, double* out) {
  NSCTL_REQUIRE(table);
  NSCTL_REQUIRE(out);
  const auto& t = *table->table;
  if (i >= t.size() || j >= t.size() || k >= t.size())
    return fail(NSCTL_ERR_VALIDATION, "invalid_argument", "mode index out of range");
  *out = 0.0;
  for (const auto& term : t.bracket(i, j))
    if (term.mode == k) *out = term.coeff;
  g_error.clear();
  return NSCTL_OK;
}

nsctl_status nsctl_system_create(const nsctl_table* table, const char* const* observed, size_t n_observed,
                                 const char* const* controlled, size_t n_controlled, double nu,
                                 nsctl_system** out) {
  NSCTL_REQUIRE(table);
  NSCTL_REQUIRE(out);
  if (n_observed > 0) NSCTL_REQUIRE(observed);
  if (n_controlled > 0) NSCTL_REQUIRE(controlled);
  return guarded([&] {
    const auto& t = *table->table;
    std::vector<std::size_t> obs, ctl;
    for (size_t i = 0; i < n_observed; ++i) obs.push_back(t.require_index(nsctl::ModeId::parse(observed[i])));
    for (size_t i = 0; i < n_controlled; ++i) ctl.push_back(t.require_index(nsctl::ModeId::parse(controlled[i])));
    auto h = std::make_unique<nsctl_system>();
    h->sys = std::make_unique<nsctl::GalerkinSystem>(table->table, std::move(obs), std::move(ctl), nu);
    *out = h.release();
    return NSCTL_OK;
  });
}

void nsctl_system_free(nsctl_system* sys) { delete sys; }

size_t nsctl_system_dimension(const nsctl_system* sys) { return sys ? sys->sys->dimension() : 0; }

nsctl_status nsctl_system_label(const nsctl_system* sys, size_t index, char* buf, size_t len, size_t* needed) {
  NSCTL_REQUIRE(sys);
  return guarded([&] {
    if (index >= sys->sys->dimension()) return fail(NSCTL_ERR_VALIDATION, "invalid_argument", "state index out of range");
    return copy_label(sys->sys->labels()[index], buf, len, needed);
  });
}

nsctl_status nsctl_system_rhs(const nsctl_system* sys, const double* q, double* dq) {
  NSCTL_REQUIRE(sys);
  NSCTL_REQUIRE(q);
  NSCTL_REQUIRE(dq);
  return guarded([&] {
    const std::size_t n = sys->sys->dimension();
    sys->sys->drift({q, n}, {dq, n});
    return NSCTL_OK;
  });
}

nsctl_status nsctl_system_integrate(const nsctl_system* sys, const double* q0, double t_end, double abs_tol,
                                    double rel_tol, double* q_end) {
  NSCTL_REQUIRE(sys);
  NSCTL_REQUIRE(q0);
  NSCTL_REQUIRE(q_end);
  return guarded([&] {
    const std::size_t n = sys->sys->dimension();
    nsctl::IntegrateOptions opt;
    opt.abs_tol = abs_tol;
    opt.rel_tol = rel_tol;
    const auto traj = nsctl::integrate(*sys->sys, {q0, n}, nsctl::ControlSignal{}, t_end, opt);
    std::copy(traj.endpoint().begin(), traj.endpoint().end(), q_end);
    return NSCTL_OK;
  });
}

nsctl_status nsctl_system_diagnostics(const nsctl_system* sys, const double* q, double* energy, double* enstrophy) {
  NSCTL_REQUIRE(sys);
  NSCTL_REQUIRE(q);
  return guarded([&] {
    const auto d = sys->sys->diagnostics({q, sys->sys->dimension()});
    if (energy) *energy = d.energy;
    if (enstrophy) *enstrophy = d.enstrophy;
    return NSCTL_OK;
  });
}

}  // extern "C"
