// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the dmpcs compressive-sensing engine.
 *
 * Every object is an opaque handle released with its *_free function.
 * Functions return a dmpcs_status; on failure dmpcs_last_error() describes
 * the problem until the next call on the same thread. Strings returned
 * through char** are released with dmpcs_string_free. */
#ifndef DMPCS_DMPCS_H_
#define DMPCS_DMPCS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DMPCS_API __declspec(dllexport)
#else
#define DMPCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dmpcs_status {
  DMPCS_OK = 0,
  DMPCS_ERR_INVALID_ARGUMENT = 1,
  DMPCS_ERR_IO = 2,
  DMPCS_ERR_NUMERICAL = 3,
  DMPCS_ERR_INTERNAL = 4
} dmpcs_status;

typedef struct dmpcs_tensor dmpcs_tensor;
typedef struct dmpcs_operator dmpcs_operator;
typedef struct dmpcs_model dmpcs_model;

DMPCS_API const char* dmpcs_version(void);
DMPCS_API const char* dmpcs_last_error(void);
DMPCS_API void dmpcs_string_free(char* s);

/* ---- tensors (row-major float64) ---- */
DMPCS_API dmpcs_status dmpcs_tensor_create(const size_t* shape, size_t rank, const double* data,
                                           dmpcs_tensor** out);
DMPCS_API size_t dmpcs_tensor_rank(const dmpcs_tensor* t);
DMPCS_API size_t dmpcs_tensor_dim(const dmpcs_tensor* t, size_t axis);
DMPCS_API size_t dmpcs_tensor_size(const dmpcs_tensor* t);
DMPCS_API const double* dmpcs_tensor_data(const dmpcs_tensor* t);
DMPCS_API dmpcs_status dmpcs_tensor_load(const char* path, dmpcs_tensor** out);
DMPCS_API dmpcs_status dmpcs_tensor_save(const dmpcs_tensor* t, const char* path);
/* Images are [1,H,W] tensors with values in [0,1]. */
DMPCS_API dmpcs_status dmpcs_pgm_load(const char* path, dmpcs_tensor** out);
DMPCS_API dmpcs_status dmpcs_pgm_save(const dmpcs_tensor* image, const char* path);
DMPCS_API void dmpcs_tensor_free(dmpcs_tensor* t);

/* ---- sensing ---- */
DMPCS_API dmpcs_status dmpcs_operator_generate(size_t m, size_t n, uint64_t seed,
                                               dmpcs_operator** out);
/* M = floor(ratio * block^2). */
DMPCS_API dmpcs_status dmpcs_operator_for_ratio(double ratio, size_t block, uint64_t seed,
                                                dmpcs_operator** out);
DMPCS_API dmpcs_status dmpcs_operator_load(const char* path, dmpcs_operator** out);
DMPCS_API dmpcs_status dmpcs_operator_save(const dmpcs_operator* op, const char* path);
DMPCS_API size_t dmpcs_operator_rows(const dmpcs_operator* op);
DMPCS_API size_t dmpcs_operator_cols(const dmpcs_operator* op);
DMPCS_API void dmpcs_operator_free(dmpcs_operator* op);

/* y = Phi x per block (+ sigma * noise), returned as [blocks, M]. */
DMPCS_API dmpcs_status dmpcs_sense(const dmpcs_operator* op, const dmpcs_tensor* image,
                                   double sigma, uint64_t seed, dmpcs_tensor** y);

/* ---- reconstruction ---- */
DMPCS_API dmpcs_status dmpcs_reconstruct_adjoint(const dmpcs_operator* op, const dmpcs_tensor* y,
                                                 size_t height, size_t width, dmpcs_tensor** out);

typedef struct dmpcs_amp_options {
  const char* denoiser; /* "mmse_gaussian", "mmse_bg", "soft_threshold" */
  double rho;           /* Bernoulli-Gaussian sparsity */
  double tau;           /* soft threshold, relative to the noise level */
  const char* onsager;  /* "oracle", "mc_sure", "off" */
  size_t iterations;
  uint64_t seed;
} dmpcs_amp_options;

DMPCS_API void dmpcs_amp_options_default(dmpcs_amp_options* o);
DMPCS_API dmpcs_status dmpcs_reconstruct_amp(const dmpcs_operator* op, const dmpcs_tensor* y,
                                             size_t height, size_t width,
                                             const dmpcs_amp_options* options, dmpcs_tensor** out);

typedef struct dmpcs_dmp_options {
  size_t schedule_steps; /* T */
  double beta_start;
  double beta_end;
  size_t start;          /* K */
  size_t stride;         /* dt */
  const char* onsager;   /* "oracle", "mc_sure", "off" */
  const char* init;      /* "adjoint", "pure_noise" */
  const char* filter_var; /* "marginal" (1 - ab_t) or "sqrt_alpha" (1 - sqrt(ab_t)) */
  int stochastic;        /* posterior noise in the reverse hop */
  uint64_t seed;
  /* Ground-truth image for the oracle filter and reverse model, or NULL. */
  const dmpcs_tensor* truth;
  /* Learned reverse model used when truth is NULL (filter becomes the identity). */
  const dmpcs_model* model;
} dmpcs_dmp_options;

DMPCS_API void dmpcs_dmp_options_default(dmpcs_dmp_options* o);
DMPCS_API dmpcs_status dmpcs_reconstruct_dmp(const dmpcs_operator* op, const dmpcs_tensor* y,
                                             size_t height, size_t width,
                                             const dmpcs_dmp_options* options, dmpcs_tensor** out);

/* ---- unfolded network ---- */
typedef struct dmpcs_model_config {
  size_t block;
  size_t channels;
  size_t res_units;
  size_t start;
  size_t stride;
  size_t reverse_width;
  size_t reverse_depth;
  size_t schedule_steps;
  double beta_start;
  double beta_end;
  int freeze_diffusion;
  int train_phi;
  int stochastic;
  uint64_t seed;
} dmpcs_model_config;

DMPCS_API void dmpcs_model_config_default(dmpcs_model_config* c);
DMPCS_API dmpcs_status dmpcs_model_build(const dmpcs_model_config* config,
                                         const dmpcs_operator* op, dmpcs_model** out);
DMPCS_API dmpcs_status dmpcs_model_load(const char* path, dmpcs_model** out);
/* run_json: caller metadata echoed into the checkpoint (may be NULL). */
DMPCS_API dmpcs_status dmpcs_model_save(const dmpcs_model* model, const char* path,
                                        const char* run_json);
DMPCS_API dmpcs_status dmpcs_model_operator(const dmpcs_model* model, dmpcs_operator** out);
DMPCS_API size_t dmpcs_model_parameter_count(const dmpcs_model* model);
DMPCS_API dmpcs_status dmpcs_model_reconstruct(const dmpcs_model* model, const dmpcs_tensor* y,
                                               size_t height, size_t width, dmpcs_tensor** out);
DMPCS_API void dmpcs_model_free(dmpcs_model* model);

typedef struct dmpcs_train_options {
  const char* data_dir;
  size_t crop;
  int flip;
  double val_fraction;
  size_t epochs;
  size_t batch;
  double lr;
  double lr_min;
  double clip_norm;         /* global gradient-norm clip, 0 disables */
  uint64_t seed;
  const char* pretrained;   /* checkpoint whose reverse.* weights are loaded first, or NULL */
  const char* progress_csv; /* epoch,batch,loss,lr,val_psnr rows, or NULL */
} dmpcs_train_options;

DMPCS_API void dmpcs_train_options_default(dmpcs_train_options* o);
/* history_json receives the loss and validation histories. */
DMPCS_API dmpcs_status dmpcs_train(dmpcs_model* model, const dmpcs_train_options* options,
                                   char** history_json);
DMPCS_API dmpcs_status dmpcs_pretrain(dmpcs_model* model, const dmpcs_train_options* options,
                                      char** history_json);

/* ---- experiments and diagnostics ---- */
typedef struct dmpcs_se_options {
  const char* algo;    /* "amp" or "dmp" */
  const char* prior;   /* "gaussian" or "bg:<rho>" */
  double delta;
  size_t n;
  size_t iterations;   /* amp */
  size_t trials;
  const char* onsager;
  size_t schedule_steps;
  double beta_start;
  double beta_end;
  size_t start;
  size_t stride;
  size_t samples;      /* dmp Monte-Carlo samples */
  int stochastic;
  uint64_t seed;
} dmpcs_se_options;

DMPCS_API void dmpcs_se_options_default(dmpcs_se_options* o);
/* Two-column predicted,empirical CSV. */
DMPCS_API dmpcs_status dmpcs_se_sim(const dmpcs_se_options* options, char** csv);
/* Q-Q data of the filtered residual r_t at every time of an oracle DMP run:
 * columns time,normal,empirical. */
DMPCS_API dmpcs_status dmpcs_qq_dump(const dmpcs_se_options* options, size_t points, char** csv);

DMPCS_API dmpcs_status dmpcs_eval(const dmpcs_tensor* ref, const dmpcs_tensor* rec, double* psnr_db,
                                  double* ssim);
/* format: "csv" or "table". */
DMPCS_API dmpcs_status dmpcs_flops(const dmpcs_model_config* config, size_t measurements,
                                   size_t height, size_t width, size_t probes, const char* format,
                                   char** report);
DMPCS_API dmpcs_status dmpcs_generate_corpus(const char* dir, size_t count, size_t height,
                                             size_t width, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* DMPCS_DMPCS_H_ */
