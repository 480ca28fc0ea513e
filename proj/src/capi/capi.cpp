#include "abpinn/abpinn.h"

#include <cstring>
#include <new>
#include <string>

#include "abpinn/error.hpp"
#include "abpinn/experiment/experiment.hpp"

using namespace abpinn;

struct abpinn_config {
  experiment::ExperimentConfig config;
};

struct abpinn_result {
  experiment::ExperimentResult result;
};

struct abpinn_model {
  ansatz::AbPinnModel model;
  problems::ProblemSpec problem;
};

namespace {

thread_local std::string last_error;

abpinn_status fail(abpinn_status status, const std::string& message) {
  last_error = message;
  return status;
}

/// Runs `body`, translating every exception into a status code.
template <typename F>
abpinn_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return ABPINN_OK;
  } catch (const ContractError& e) {
    return fail(ABPINN_ERR_CONTRACT, e.what());
  } catch (const CapabilityError& e) {
    return fail(ABPINN_ERR_CAPABILITY, e.what());
  } catch (const GraphError& e) {
    return fail(ABPINN_ERR_GRAPH, e.what());
  } catch (const StateError& e) {
    return fail(ABPINN_ERR_STATE, e.what());
  } catch (const DiagnosticError& e) {
    return fail(ABPINN_ERR_DIAGNOSTIC, e.what());
  } catch (const ConfigError& e) {
    return fail(ABPINN_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return fail(ABPINN_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ABPINN_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ABPINN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ABPINN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ABPINN_ERR_INTERNAL, "unknown error");
  }
}

#define ABPINN_REQUIRE(cond, msg) \
  if (!(cond)) return fail(ABPINN_ERR_INVALID_ARGUMENT, msg)

abpinn_status copy_text(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  ABPINN_REQUIRE(needed || buffer, "no output buffer");
  if (needed) *needed = text.size() + 1;
  if (!buffer || capacity < text.size() + 1) {
    return fail(ABPINN_ERR_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  last_error.clear();
  return ABPINN_OK;
}

}  // namespace

extern "C" {

const char* abpinn_version(void) { return "1.0.0"; }

const char* abpinn_status_string(abpinn_status status) {
  switch (status) {
    case ABPINN_OK:
      return "ok";
    case ABPINN_ERR_CONTRACT:
      return "contract violation";
    case ABPINN_ERR_CAPABILITY:
      return "unsupported request";
    case ABPINN_ERR_GRAPH:
      return "graph construction error";
    case ABPINN_ERR_STATE:
      return "missing state";
    case ABPINN_ERR_DIAGNOSTIC:
      return "numerical failure";
    case ABPINN_ERR_CONFIG:
      return "configuration error";
    case ABPINN_ERR_IO:
      return "i/o error";
    case ABPINN_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case ABPINN_ERR_BUFFER_TOO_SMALL:
      return "buffer too small";
    case ABPINN_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* abpinn_last_error(void) { return last_error.c_str(); }

abpinn_status abpinn_config_load(const char* path, abpinn_config** out) {
  ABPINN_REQUIRE(path && out, "path and out must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new abpinn_config{experiment::load_config(path)}; });
}

abpinn_status abpinn_config_parse(const char* text, abpinn_config** out) {
  ABPINN_REQUIRE(text && out, "text and out must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new abpinn_config{experiment::parse_config(text)}; });
}

void abpinn_config_free(abpinn_config* config) { delete config; }

abpinn_status abpinn_config_serialize(const abpinn_config* config, char* buffer, size_t capacity, size_t* needed) {
  ABPINN_REQUIRE(config, "config must not be NULL");
  std::string text;
  const auto s = guarded([&] { text = experiment::serialize(config->config); });
  if (s != ABPINN_OK) return s;
  return copy_text(text, buffer, capacity, needed);
}

abpinn_status abpinn_config_output_dir(const abpinn_config* config, char* buffer, size_t capacity, size_t* needed) {
  ABPINN_REQUIRE(config, "config must not be NULL");
  return copy_text(config->config.output_dir.string(), buffer, capacity, needed);
}

abpinn_status abpinn_config_set_output_dir(abpinn_config* config, const char* dir) {
  ABPINN_REQUIRE(config && dir && *dir, "config and a non-empty dir are required");
  config->config.output_dir = dir;
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_config_seed_count(const abpinn_config* config, size_t* count) {
  ABPINN_REQUIRE(config && count, "config and count must not be NULL");
  *count = config->config.seeds.size();
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_config_seeds(const abpinn_config* config, uint64_t* seeds, size_t capacity) {
  ABPINN_REQUIRE(config && seeds, "config and seeds must not be NULL");
  const auto& s = config->config.seeds;
  if (capacity < s.size()) return fail(ABPINN_ERR_BUFFER_TOO_SMALL, "seed buffer too small");
  std::copy(s.begin(), s.end(), seeds);
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_config_set_seeds(abpinn_config* config, const uint64_t* seeds, size_t count) {
  ABPINN_REQUIRE(config && seeds && count > 0, "config and at least one seed are required");
  return guarded([&] {
    auto c = config->config;
    c.seeds.assign(seeds, seeds + count);
    experiment::validate(c);
    config->config = std::move(c);
  });
}

abpinn_status abpinn_config_needs_reference(const abpinn_config* config, int* needs) {
  ABPINN_REQUIRE(config && needs, "config and needs must not be NULL");
  return guarded([&] { *needs = experiment::make_problem_spec(config->config).analytic() ? 0 : 1; });
}

abpinn_status abpinn_config_reference_path(const abpinn_config* config, char* buffer, size_t capacity,
                                           size_t* needed) {
  ABPINN_REQUIRE(config, "config must not be NULL");
  return copy_text(experiment::reference_path(config->config).string(), buffer, capacity, needed);
}

abpinn_status abpinn_config_set_reference_path(abpinn_config* config, const char* path) {
  ABPINN_REQUIRE(config && path && *path, "config and a non-empty path are required");
  config->config.reference.path = path;
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_run(const abpinn_config* config, abpinn_progress_fn progress, void* user, abpinn_result** out) {
  ABPINN_REQUIRE(config && out, "config and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    experiment::SeedProgress cb;
    if (progress) {
      cb = [&](std::uint64_t seed, const trainer::TrainRecord& r) {
        progress(user, seed, r.iter, r.residual_loss, r.l2_error, r.subdomain_count, r.event.c_str());
      };
    }
    *out = new abpinn_result{experiment::run_experiment(config->config, cb)};
  });
}

void abpinn_result_free(abpinn_result* result) { delete result; }

abpinn_status abpinn_result_seed_count(const abpinn_result* result, size_t* count) {
  ABPINN_REQUIRE(result && count, "result and count must not be NULL");
  *count = result->result.seeds.size();
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_result_seed(const abpinn_result* result, size_t index, abpinn_seed_summary* out) {
  ABPINN_REQUIRE(result && out, "result and out must not be NULL");
  ABPINN_REQUIRE(index < result->result.seeds.size(), "seed index out of range");
  const auto& s = result->result.seeds[index];
  out->seed = s.seed;
  out->ok = s.ok ? 1 : 0;
  out->final_residual = s.final_residual;
  out->l2_error = s.l2.value;
  out->l2_absolute = s.l2.absolute ? 1 : 0;
  out->subdomain_count = s.subdomain_count;
  out->selected = result->result.best == index ? 1 : 0;
  last_error.clear();
  return ABPINN_OK;
}

const char* abpinn_result_seed_error(const abpinn_result* result, size_t index) {
  if (!result || index >= result->result.seeds.size()) return "";
  return result->result.seeds[index].error.c_str();
}

abpinn_status abpinn_result_best(const abpinn_result* result, size_t* index) {
  ABPINN_REQUIRE(result && index, "result and index must not be NULL");
  if (!result->result.best) return fail(ABPINN_ERR_STATE, "every seed failed");
  *index = *result->result.best;
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_reference_generate(const abpinn_config* config, int force, int* written) {
  ABPINN_REQUIRE(config, "config must not be NULL");
  return guarded([&] {
    const bool w = experiment::generate_reference(config->config, force != 0);
    if (written) *written = w ? 1 : 0;
  });
}

abpinn_status abpinn_model_create(const abpinn_config* config, uint64_t seed, abpinn_model** out) {
  ABPINN_REQUIRE(config && out, "config and out must not be NULL");
  *out = nullptr;
  return guarded([&] {
    *out = new abpinn_model{experiment::build_model(config->config, seed),
                            experiment::make_problem_spec(config->config)};
  });
}

void abpinn_model_free(abpinn_model* model) { delete model; }

abpinn_status abpinn_model_input_dim(const abpinn_model* model, size_t* dim) {
  ABPINN_REQUIRE(model && dim, "model and dim must not be NULL");
  *dim = static_cast<size_t>(model->problem.dim());
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_model_subdomain_count(const abpinn_model* model, size_t* count) {
  ABPINN_REQUIRE(model && count, "model and count must not be NULL");
  *count = model->model.subdomain_count();
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_model_parameter_count(const abpinn_model* model, size_t* count) {
  ABPINN_REQUIRE(model && count, "model and count must not be NULL");
  *count = model->model.parameter_count();
  last_error.clear();
  return ABPINN_OK;
}

abpinn_status abpinn_model_evaluate(const abpinn_model* model, const double* points, size_t n, double* values) {
  ABPINN_REQUIRE(model && (n == 0 || (points && values)), "model, points and values must not be NULL");
  return guarded([&] {
    const Eigen::Map<const Eigen::MatrixXd> pts(points, model->problem.dim(), static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::VectorXd>(values, static_cast<Eigen::Index>(n)) = model->model.values(pts);
  });
}

abpinn_status abpinn_model_residual(const abpinn_model* model, const double* points, size_t n, double* residuals) {
  ABPINN_REQUIRE(model && (n == 0 || (points && residuals)), "model, points and residuals must not be NULL");
  return guarded([&] {
    const Eigen::Map<const Eigen::MatrixXd> pts(points, model->problem.dim(), static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::VectorXd>(residuals, static_cast<Eigen::Index>(n)) =
        trainer::pointwise_residual(model->model, model->problem, pts);
  });
}

}  // extern "C"
