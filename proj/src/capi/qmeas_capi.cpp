#include "qmeas/qmeas.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "qmeas/bounds_verifier.hpp"
#include "qmeas/errors.hpp"
#include "qmeas/measure.hpp"
#include "qmeas/observables.hpp"
#include "qmeas/quantum_state.hpp"
#include "qmeas/spec_io.hpp"
#include "qmeas/transport.hpp"

struct qm_measure {
  qmeas::GridMeasure m;
};
struct qm_state {
  qmeas::MixedState s;
};
struct qm_observable {
  qmeas::Observable o;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_class;

qm_status status_of(qmeas::ErrorKind k) {
  switch (k) {
    case qmeas::ErrorKind::Domain: return QM_ERR_DOMAIN;
    case qmeas::ErrorKind::Resource: return QM_ERR_RESOURCE;
    case qmeas::ErrorKind::Convergence: return QM_ERR_CONVERGENCE;
    case qmeas::ErrorKind::GridTooSmall: return QM_ERR_GRID_TOO_SMALL;
    case qmeas::ErrorKind::Accuracy: return QM_ERR_ACCURACY;
    case qmeas::ErrorKind::Internal: return QM_ERR_INTERNAL;
    case qmeas::ErrorKind::Io: return QM_ERR_IO;
    case qmeas::ErrorKind::Schema: return QM_ERR_SCHEMA;
  }
  return QM_ERR_INTERNAL;
}

qm_status set_error(qm_status st, const char* cls, const std::string& msg) {
  g_class = cls;
  g_message = msg;
  return st;
}

// Runs f and converts every exception into a status code.
template <class F>
qm_status guard(F&& f) {
  g_message.clear();
  g_class.clear();
  try {
    f();
    return QM_OK;
  } catch (const qmeas::Error& e) {
    return set_error(status_of(e.kind()), std::string(qmeas::error_kind_name(e.kind())).c_str(), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(QM_ERR_RESOURCE, "ResourceError", "out of memory");
  } catch (const std::exception& e) {
    return set_error(QM_ERR_INTERNAL, "InternalError", e.what());
  } catch (...) {
    return set_error(QM_ERR_INTERNAL, "InternalError", "unknown exception");
  }
}

qm_status bad_arg(const char* what) { return set_error(QM_ERR_INVALID_ARGUMENT, "InvalidArgument", what); }

qmeas::Axis axis_of(qm_axis a) { return a == QM_MOMENTUM ? qmeas::Axis::Momentum : qmeas::Axis::Position; }

}  // namespace

extern "C" {

const char* qm_last_error(void) { return g_message.c_str(); }
const char* qm_last_error_class(void) { return g_class.c_str(); }

const char* qm_status_name(qm_status status) {
  switch (status) {
    case QM_OK: return "OK";
    case QM_ERR_DOMAIN: return "DomainError";
    case QM_ERR_RESOURCE: return "ResourceError";
    case QM_ERR_CONVERGENCE: return "ConvergenceError";
    case QM_ERR_GRID_TOO_SMALL: return "GridTooSmallError";
    case QM_ERR_ACCURACY: return "AccuracyError";
    case QM_ERR_INTERNAL: return "InternalError";
    case QM_ERR_IO: return "IoError";
    case QM_ERR_SCHEMA: return "SchemaError";
    case QM_ERR_INVALID_ARGUMENT: return "InvalidArgument";
  }
  return "Unknown";
}

qm_status qm_measure_create(const double* atoms, const double* weights, size_t n, qm_measure** out) {
  if (!out || (n > 0 && (!atoms || !weights))) return bad_arg("null pointer");
  return guard([&] {
    auto m = qmeas::GridMeasure::normalized(std::vector<double>(atoms, atoms + n),
                                            std::vector<double>(weights, weights + n));
    *out = new qm_measure{std::move(m)};
  });
}

qm_status qm_measure_load_csv(const char* path, qm_measure** out) {
  if (!path || !out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_measure{qmeas::load_measure_csv(path)}; });
}

void qm_measure_free(qm_measure* m) { delete m; }

size_t qm_measure_size(const qm_measure* m) { return m ? m->m.size() : 0; }

qm_status qm_measure_data(const qm_measure* m, double* atoms, double* weights, size_t cap, size_t* n) {
  if (!m || !n || (cap > 0 && (!atoms || !weights))) return bad_arg("null pointer");
  return guard([&] {
    const size_t k = std::min(cap, m->m.size());
    std::memcpy(atoms, m->m.atoms().data(), k * sizeof(double));
    std::memcpy(weights, m->m.weights().data(), k * sizeof(double));
    *n = k;
  });
}

qm_status qm_measure_alpha_deviation(const qm_measure* m, double alpha, double* out) {
  if (!m || !out) return bad_arg("null pointer");
  return guard([&] { *out = qmeas::alpha_deviation(m->m, alpha); });
}

qm_status qm_measure_overall_width(const qm_measure* m, double eps, double* out) {
  if (!m || !out) return bad_arg("null pointer");
  return guard([&] { *out = qmeas::overall_width(m->m, eps); });
}

qm_status qm_wasserstein(const qm_measure* a, const qm_measure* b, double alpha, double* out) {
  if (!a || !b || !out) return bad_arg("null pointer");
  return guard([&] {
    *out = (!(alpha > 0.0) || std::isinf(alpha)) ? qmeas::wasserstein_inf(a->m, b->m)
                                                  : qmeas::wasserstein(a->m, b->m, alpha);
  });
}

qm_status qm_state_gaussian(double x0, double dx, size_t size, double hbar, double center, double p0, double sigma,
                            qm_state** out) {
  if (!out) return bad_arg("null pointer");
  return guard([&] {
    qmeas::Grid g{x0, dx, size, hbar};
    g.validate();
    *out = new qm_state{qmeas::MixedState(qmeas::make_gaussian(g, center, p0, sigma))};
  });
}

qm_status qm_state_load_csv(const char* path, double hbar, qm_state** out) {
  if (!path || !out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_state{qmeas::MixedState(qmeas::load_state_csv(path, hbar))}; });
}

void qm_state_free(qm_state* s) { delete s; }

qm_status qm_state_distribution(const qm_state* s, qm_axis axis, qm_measure** out) {
  if (!s || !out) return bad_arg("null pointer");
  return guard([&] {
    *out = new qm_measure{axis == QM_MOMENTUM ? qmeas::momentum_distribution(s->s) : qmeas::position_distribution(s->s)};
  });
}

qm_status qm_observable_sharp(qm_axis axis, qm_observable** out) {
  if (!out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_observable{qmeas::Observable::sharp(axis_of(axis))}; });
}

qm_status qm_observable_smeared(qm_axis axis, const qm_measure* noise, qm_observable** out) {
  if (!noise || !out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_observable{qmeas::Observable::smeared(axis_of(axis), noise->m)}; });
}

qm_status qm_observable_covariant_marginal(const qm_state* tau, qm_axis axis, qm_observable** out) {
  if (!tau || !out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_observable{qmeas::Observable::covariant_marginal(tau->s, axis_of(axis))}; });
}

void qm_observable_free(qm_observable* o) { delete o; }

qm_status qm_observable_distribution(const qm_observable* o, const qm_state* s, qm_measure** out) {
  if (!o || !s || !out) return bad_arg("null pointer");
  return guard([&] { *out = new qm_measure{qmeas::distribution(o->o, s->s)}; });
}

qm_status qm_ground_state_constant(double alpha, double beta, double* g, double* c) {
  if (!g || !c) return bad_arg("null pointer");
  return guard([&] {
    const auto r = qmeas::c_alpha_beta(alpha, beta);
    *g = r.g;
    *c = r.c;
  });
}

qm_status qm_run(const char* command, const char* request_json, char** out) {
  if (!command || !out) return bad_arg("null pointer");
  *out = nullptr;
  return guard([&] {
    const std::string text = qmeas::run_request(command, request_json ? request_json : "");
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void qm_string_free(char* s) { delete[] s; }

}  // extern "C"
