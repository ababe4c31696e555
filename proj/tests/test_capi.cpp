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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dmpcs/dmpcs.h"

namespace fs = std::filesystem;

namespace {

struct Owned {
  dmpcs_tensor* t = nullptr;
  ~Owned() { dmpcs_tensor_free(t); }
};

struct OwnedOp {
  dmpcs_operator* op = nullptr;
  ~OwnedOp() { dmpcs_operator_free(op); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  dmpcs_string_free(s);
  return out;
}

dmpcs_tensor* make_image(std::size_t h, std::size_t w, double phase) {
  std::vector<double> v(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      v[i * w + j] = 0.5 + 0.4 * std::sin(0.3 * double(i) + 0.2 * double(j) + phase);
  const size_t shape[3] = {1, h, w};
  dmpcs_tensor* t = nullptr;
  EXPECT_EQ(dmpcs_tensor_create(shape, 3, v.data(), &t), DMPCS_OK);
  return t;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dmpcs_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(CApi, VersionAndErrors) {
  EXPECT_NE(std::string(dmpcs_version()), "");
  dmpcs_tensor* t = nullptr;
  EXPECT_EQ(dmpcs_tensor_create(nullptr, 1, nullptr, &t), DMPCS_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(dmpcs_last_error()), "");
  EXPECT_EQ(dmpcs_pgm_load("/nonexistent/dir/x.pgm", &t), DMPCS_ERR_IO);
  EXPECT_NE(std::string(dmpcs_last_error()).find("x.pgm"), std::string::npos);
  EXPECT_EQ(t, nullptr);
}

TEST(CApi, TensorAccessors) {
  const size_t shape[2] = {2, 3};
  const double data[6] = {1, 2, 3, 4, 5, 6};
  Owned t;
  ASSERT_EQ(dmpcs_tensor_create(shape, 2, data, &t.t), DMPCS_OK);
  EXPECT_EQ(dmpcs_tensor_rank(t.t), 2u);
  EXPECT_EQ(dmpcs_tensor_dim(t.t, 1), 3u);
  EXPECT_EQ(dmpcs_tensor_size(t.t), 6u);
  EXPECT_EQ(dmpcs_tensor_data(t.t)[5], 6.0);
  const fs::path dir = temp_dir("tensor");
  const std::string path = (dir / "t.dtn").string();
  ASSERT_EQ(dmpcs_tensor_save(t.t, path.c_str()), DMPCS_OK);
  Owned back;
  ASSERT_EQ(dmpcs_tensor_load(path.c_str(), &back.t), DMPCS_OK);
  EXPECT_EQ(std::vector<double>(dmpcs_tensor_data(back.t), dmpcs_tensor_data(back.t) + 6),
            std::vector<double>(data, data + 6));
  fs::remove_all(dir);
}

TEST(CApi, AdjointMatchesTransposeProduct) {
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_for_ratio(0.25, 16, 3, &op.op), DMPCS_OK);
  ASSERT_EQ(dmpcs_operator_rows(op.op), 64u);
  Owned img{make_image(32, 32, 0.0)}, y, adj;
  ASSERT_EQ(dmpcs_sense(op.op, img.t, 0.0, 0, &y.t), DMPCS_OK);
  ASSERT_EQ(dmpcs_tensor_dim(y.t, 0), 4u);
  ASSERT_EQ(dmpcs_reconstruct_adjoint(op.op, y.t, 32, 32, &adj.t), DMPCS_OK);

  const fs::path dir = temp_dir("adjoint");
  const std::string path = (dir / "phi.dtn").string();
  ASSERT_EQ(dmpcs_operator_save(op.op, path.c_str()), DMPCS_OK);
  Owned phi;
  ASSERT_EQ(dmpcs_tensor_load(path.c_str(), &phi.t), DMPCS_OK);
  const double* p = dmpcs_tensor_data(phi.t);
  const double* yv = dmpcs_tensor_data(y.t);
  const double* a = dmpcs_tensor_data(adj.t);
  // block (1,0) covers rows 16..31, columns 0..15
  for (std::size_t k = 0; k < 256; ++k) {
    double ref = 0.0;
    for (std::size_t m = 0; m < 64; ++m) ref += p[m * 256 + k] * yv[2 * 64 + m];
    const std::size_t r = 16 + k / 16, c = k % 16;
    EXPECT_NEAR(a[r * 32 + c], ref, 1e-12);
  }
  fs::remove_all(dir);
}

TEST(CApi, NonSquareBlockRejected) {
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_generate(10, 250, 1, &op.op), DMPCS_OK);
  Owned img{make_image(32, 32, 0.0)}, y;
  EXPECT_EQ(dmpcs_sense(op.op, img.t, 0.0, 0, &y.t), DMPCS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, OracleDmpIsExact) {
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_for_ratio(0.5, 16, 2, &op.op), DMPCS_OK);
  Owned img{make_image(32, 32, 0.4)}, y, rec;
  ASSERT_EQ(dmpcs_sense(op.op, img.t, 0.0, 0, &y.t), DMPCS_OK);
  dmpcs_dmp_options o;
  dmpcs_dmp_options_default(&o);
  o.truth = img.t;
  ASSERT_EQ(dmpcs_reconstruct_dmp(op.op, y.t, 32, 32, &o, &rec.t), DMPCS_OK) << dmpcs_last_error();
  double psnr = 0.0, ssim = 0.0;
  ASSERT_EQ(dmpcs_eval(img.t, rec.t, &psnr, &ssim), DMPCS_OK);
  EXPECT_GT(psnr, 100.0);
  o.truth = nullptr;
  Owned bad;
  EXPECT_EQ(dmpcs_reconstruct_dmp(op.op, y.t, 32, 32, &o, &bad.t), DMPCS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, AmpRuns) {
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_for_ratio(0.5, 16, 2, &op.op), DMPCS_OK);
  Owned img{make_image(16, 16, 0.1)}, y, rec;
  ASSERT_EQ(dmpcs_sense(op.op, img.t, 0.0, 0, &y.t), DMPCS_OK);
  dmpcs_amp_options o;
  dmpcs_amp_options_default(&o);
  ASSERT_EQ(dmpcs_reconstruct_amp(op.op, y.t, 16, 16, &o, &rec.t), DMPCS_OK) << dmpcs_last_error();
  for (std::size_t i = 0; i < dmpcs_tensor_size(rec.t); ++i)
    EXPECT_TRUE(std::isfinite(dmpcs_tensor_data(rec.t)[i]));
  o.denoiser = "median";
  Owned bad;
  EXPECT_EQ(dmpcs_reconstruct_amp(op.op, y.t, 16, 16, &o, &bad.t), DMPCS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, EvalIdentical) {
  Owned a{make_image(16, 16, 0.0)};
  double psnr = 0.0, ssim = 0.0;
  ASSERT_EQ(dmpcs_eval(a.t, a.t, &psnr, &ssim), DMPCS_OK);
  EXPECT_TRUE(std::isinf(psnr));
  EXPECT_NEAR(ssim, 1.0, 1e-12);
}

TEST(CApi, SeSimCsvShape) {
  dmpcs_se_options o;
  dmpcs_se_options_default(&o);
  o.n = 512;
  o.trials = 2;
  char* csv = nullptr;
  ASSERT_EQ(dmpcs_se_sim(&o, &csv), DMPCS_OK) << dmpcs_last_error();
  const std::string s = take(csv);
  EXPECT_EQ(s.rfind("predicted,empirical\n", 0), 0u);
  EXPECT_EQ(count_lines(s), 11u);
}

TEST(CApi, ModelSaveLoadReconstruct) {
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_for_ratio(0.1, 16, 3, &op.op), DMPCS_OK);
  dmpcs_model_config c;
  dmpcs_model_config_default(&c);
  dmpcs_model* m = nullptr;
  ASSERT_EQ(dmpcs_model_build(&c, op.op, &m), DMPCS_OK) << dmpcs_last_error();
  EXPECT_GT(dmpcs_model_parameter_count(m), 0u);
  const fs::path dir = temp_dir("model");
  const std::string path = (dir / "m.ckpt").string();
  ASSERT_EQ(dmpcs_model_save(m, path.c_str(), "{\"note\":1}"), DMPCS_OK);
  dmpcs_model* back = nullptr;
  ASSERT_EQ(dmpcs_model_load(path.c_str(), &back), DMPCS_OK);
  Owned img{make_image(32, 32, 0.2)}, y, r1, r2;
  ASSERT_EQ(dmpcs_sense(op.op, img.t, 0.0, 0, &y.t), DMPCS_OK);
  ASSERT_EQ(dmpcs_model_reconstruct(m, y.t, 32, 32, &r1.t), DMPCS_OK);
  ASSERT_EQ(dmpcs_model_reconstruct(back, y.t, 32, 32, &r2.t), DMPCS_OK);
  EXPECT_EQ(std::vector<double>(dmpcs_tensor_data(r1.t), dmpcs_tensor_data(r1.t) + 1024),
            std::vector<double>(dmpcs_tensor_data(r2.t), dmpcs_tensor_data(r2.t) + 1024));
  EXPECT_EQ(dmpcs_model_save(m, path.c_str(), "{not json"), DMPCS_ERR_INVALID_ARGUMENT);
  dmpcs_model_free(back);
  dmpcs_model_free(m);
  fs::remove_all(dir);
}

TEST(CApi, TrainTinyCorpus) {
  const fs::path dir = temp_dir("train");
  ASSERT_EQ(dmpcs_generate_corpus((dir / "data").string().c_str(), 6, 32, 32, 1), DMPCS_OK);
  OwnedOp op;
  ASSERT_EQ(dmpcs_operator_for_ratio(0.1, 16, 3, &op.op), DMPCS_OK);
  dmpcs_model_config c;
  dmpcs_model_config_default(&c);
  dmpcs_model* m = nullptr;
  ASSERT_EQ(dmpcs_model_build(&c, op.op, &m), DMPCS_OK);
  dmpcs_train_options t;
  dmpcs_train_options_default(&t);
  const std::string data = (dir / "data").string(), progress = (dir / "p.csv").string();
  t.data_dir = data.c_str();
  t.epochs = 1;
  t.batch = 2;
  t.progress_csv = progress.c_str();
  char* hist = nullptr;
  ASSERT_EQ(dmpcs_train(m, &t, &hist), DMPCS_OK) << dmpcs_last_error();
  const std::string h = take(hist);
  EXPECT_NE(h.find("\"loss\""), std::string::npos);
  EXPECT_NE(h.find("\"val_psnr\""), std::string::npos);
  EXPECT_TRUE(fs::exists(progress));
  t.lr = -1.0;
  EXPECT_EQ(dmpcs_train(m, &t, &hist), DMPCS_ERR_INVALID_ARGUMENT);
  dmpcs_model_free(m);
  fs::remove_all(dir);
}

TEST(CApi, FlopsReport) {
  dmpcs_model_config c;
  dmpcs_model_config_default(&c);
  char* a = nullptr;
  char* b = nullptr;
  ASSERT_EQ(dmpcs_flops(&c, 25, 64, 64, 1, "csv", &a), DMPCS_OK) << dmpcs_last_error();
  ASSERT_EQ(dmpcs_flops(&c, 25, 64, 64, 1, "csv", &b), DMPCS_OK);
  EXPECT_EQ(take(a), take(b));
  EXPECT_EQ(dmpcs_flops(&c, 25, 64, 64, 1, "xml", &a), DMPCS_ERR_INVALID_ARGUMENT);
}
