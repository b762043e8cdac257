// Copyright 2026 The posefuse Authors
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

// posefuse command-line front end. Talks to the library only through its C API.

#include "posefuse/posefuse.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGeneric = 1;
constexpr int kExitParse = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitIncompatible = 5;

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  I/O or other failure\n"
    "  2  parse error or invalid argument (including bad command-line flags)\n"
    "  3  precondition failed (e.g. stage order, missing data)\n"
    "  4  training diverged (non-finite loss)\n"
    "  5  incompatible checkpoint or data\n";

int exit_code(pf_status s) {
  switch (s) {
    case PF_OK:
      return kExitOk;
    case PF_ERR_PARSE:
    case PF_ERR_INVALID_ARGUMENT:
      return kExitParse;
    case PF_ERR_PRECONDITION:
      return kExitPrecondition;
    case PF_ERR_DIVERGENCE:
      return kExitDivergence;
    case PF_ERR_INCOMPATIBLE:
      return kExitIncompatible;
    case PF_ERR_IO:
    case PF_ERR_INTERNAL:
      break;
  }
  return kExitGeneric;
}

// Thrown by check() so main can report the failure once and exit.
struct Failure {
  pf_status status;
};

void check(pf_status s) {
  if (s != PF_OK) {
    throw Failure{s};
  }
}

struct StringDeleter {
  void operator()(char* s) const {
    pf_string_free(s);
  }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ConfigDeleter {
  void operator()(pf_config* c) const {
    pf_config_free(c);
  }
};
struct CheckpointDeleter {
  void operator()(pf_checkpoint* c) const {
    pf_checkpoint_free(c);
  }
};
using ConfigPtr = std::unique_ptr<pf_config, ConfigDeleter>;
using CheckpointPtr = std::unique_ptr<pf_checkpoint, CheckpointDeleter>;

CheckpointPtr load(const std::string& path) {
  pf_checkpoint* ck = nullptr;
  check(pf_checkpoint_load(path.c_str(), &ck));
  return CheckpointPtr(ck);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    throw Failure{PF_ERR_IO};
  }
}

// ---- convert ---------------------------------------------------------------

struct ConvertArgs {
  std::string input;
  std::string dataset;
  std::string output;
};

void run_convert(const ConvertArgs& a) {
  pf_convert_summary s{};
  check(pf_convert(a.input.c_str(), a.dataset.empty() ? nullptr : a.dataset.c_str(), a.output.c_str(), &s));
  std::printf("converted %zu, excluded-degenerate %zu, NaN-substituted %zu\n", s.converted, s.excluded, s.nan_substituted);
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string dataset = "mpii";
  std::string split = "train";
  int n = 100;
  int image_size = 64;
  uint64_t seed = 0;
  bool harmonize = false;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  pf_synth_options o;
  pf_synth_options_init(&o);
  o.seed = a.seed;
  o.n_samples = a.n;
  o.image_size = a.image_size;
  o.dataset = a.dataset.c_str();
  o.split = a.split.c_str();
  o.harmonize = a.harmonize ? 1 : 0;
  pf_synth_summary s{};
  check(pf_synth(&o, a.out.c_str(), &s));
  std::printf("records %zu", s.records);
  if (a.harmonize) {
    std::printf(", samples %zu, excluded-degenerate %zu", s.samples, s.excluded);
  }
  std::printf("\n");
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string stage;
  std::vector<std::string> data;
  std::string val;
  std::string config;
  std::string resume;
  int epoch_scale = 1;
  std::string mode = "fusion";
  std::optional<uint64_t> seed;
  std::string out;
  std::string log;
};

void print_entry(const char* json_line, void*) {
  const auto e = nlohmann::json::parse(json_line);
  auto num = [&](const char* k) { return e[k].is_null() ? std::string("-") : std::to_string(e[k].get<double>()); };
  std::fprintf(
      stderr,
      "[%s] epoch %d %-5s loss_2d %s loss_dep %s pckh %s mpjpe %s lr %s\n",
      e["stage"].get<std::string>().c_str(),
      e["epoch"].get<int>(),
      e["split"].get<std::string>().c_str(),
      num("loss_2d").c_str(),
      num("loss_dep").c_str(),
      num("pckh").c_str(),
      num("mpjpe").c_str(),
      num("lr").c_str());
}

void run_train(const TrainArgs& a) {
  pf_config* raw = nullptr;
  check(pf_config_default(a.stage.c_str(), a.mode.c_str(), &raw));
  ConfigPtr config(raw);
  if (!a.config.empty()) {
    check(pf_config_load(config.get(), a.config.c_str()));
  }
  if (a.seed) {
    check(pf_config_set_seed(config.get(), *a.seed));
  }
  if (a.epoch_scale != 1) {
    check(pf_config_scale_epochs(config.get(), a.epoch_scale));
  }

  char* json_raw = nullptr;
  check(pf_config_to_json(config.get(), &json_raw));
  OwnedString json(json_raw);
  const auto effective = nlohmann::json::parse(json.get());
  if (effective.at("stage").get<std::string>() != a.stage) {
    std::fprintf(
        stderr,
        "error: config file sets stage %s but --stage is %s\n",
        effective.at("stage").get<std::string>().c_str(),
        a.stage.c_str());
    throw Failure{PF_ERR_INVALID_ARGUMENT};
  }

  const std::string out = a.out.empty() ? a.stage + ".ckpt" : a.out;
  const std::string log = a.log.empty() ? out + ".log.jsonl" : a.log;
  std::fprintf(stderr, "effective config:\n%s\n", json.get());

  CheckpointPtr resume;
  if (!a.resume.empty()) {
    resume = load(a.resume);
  }
  std::vector<const char*> paths;
  for (const auto& p : a.data) {
    paths.push_back(p.c_str());
  }
  pf_train_inputs in{};
  in.data_paths = paths.data();
  in.n_data_paths = paths.size();
  in.val_path = a.val.empty() ? nullptr : a.val.c_str();
  in.resume = resume.get();
  in.log_path = log.c_str();
  in.log_fn = print_entry;

  pf_checkpoint* result = nullptr;
  check(pf_train_stage(config.get(), &in, &result));
  CheckpointPtr ck(result);
  check(pf_checkpoint_save(ck.get(), out.c_str()));
  write_text(out + ".config.json", std::string(json.get()) + "\n");
  std::printf("wrote %s (stage %s), log %s\n", out.c_str(), pf_checkpoint_stage(ck.get()), log.c_str());
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string decode = "argmax";
  bool per_joint = false;
};

void run_eval(const EvalArgs& a) {
  CheckpointPtr ck = load(a.checkpoint);
  char* json_raw = nullptr;
  char* table_raw = nullptr;
  check(pf_evaluate(ck.get(), a.data.c_str(), a.decode.c_str(), a.per_joint ? 1 : 0, &json_raw, &table_raw));
  OwnedString json(json_raw);
  OwnedString table(table_raw);
  std::fputs(table.get(), stdout);
  if (!a.out.empty()) {
    write_text(a.out + ".json", std::string(json.get()) + "\n");
    write_text(a.out + ".txt", table.get());
  }
}

// ---- render ----------------------------------------------------------------

struct RenderArgs {
  std::string checkpoint;
  std::string image;
  std::string data;
  int sample = -1;
  std::string out;
};

// Image path of sample `index` (0-based) in a samples file or dataset directory.
std::string sample_image(const std::string& data, int index) {
  std::filesystem::path file = data;
  if (std::filesystem::is_directory(file)) {
    file /= "samples.jsonl";
  }
  std::ifstream in(file);
  if (!in) {
    std::fprintf(stderr, "error: cannot open %s\n", file.string().c_str());
    throw Failure{PF_ERR_IO};
  }
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    if (seen++ == index) {
      try {
        return (file.parent_path() / nlohmann::json::parse(line).at("image").get<std::string>()).string();
      } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s: sample %d: %s\n", file.string().c_str(), index, e.what());
        throw Failure{PF_ERR_PARSE};
      }
    }
  }
  std::fprintf(stderr, "error: %s has %d samples, no sample %d\n", file.string().c_str(), seen, index);
  throw Failure{PF_ERR_INVALID_ARGUMENT};
}

void run_render(const RenderArgs& a) {
  std::string image = a.image;
  if (image.empty()) {
    if (a.data.empty() || a.sample < 0) {
      std::fprintf(stderr, "error: render needs --image, or --data together with --sample\n");
      throw Failure{PF_ERR_INVALID_ARGUMENT};
    }
    image = sample_image(a.data, a.sample);
  }
  CheckpointPtr ck = load(a.checkpoint);
  const std::string png = a.out + "_overlay.png";
  const std::string svg = a.out + "_wireframe.svg";
  check(pf_render(ck.get(), image.c_str(), png.c_str(), svg.c_str()));
  std::printf("wrote %s and %s\n", png.c_str(), svg.c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"posefuse: 2D/3D pose dataset harmonization, fusion training and evaluation"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Harmonize RawRecord JSON lines into canonical 16-joint samples");
  c->add_option("-i,--input", convert.input, "RawRecord JSON-lines file")->required();
  c->add_option("-d,--dataset", convert.dataset, "Expected source dataset (mpii, lsp, flic, h36m, mpii3d, op)");
  c->add_option("-o,--output", convert.output, "HarmonizedSample JSON-lines output")->required();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a seeded synthetic dataset in a source format");
  s->add_option("-d,--dataset", synth.dataset, "Source format to emit")->capture_default_str();
  s->add_option("--split", synth.split, "train or test")->capture_default_str();
  s->add_option("-n,--count", synth.n, "Number of records")->capture_default_str();
  s->add_option("--image-size", synth.image_size, "Square image size in pixels")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  s->add_flag("--harmonize", synth.harmonize, "Also write samples.jsonl");
  s->add_option("-o,--out", synth.out, "Output directory")->required();

  TrainArgs train;
  uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Run one training stage and write a checkpoint");
  t->add_option("--stage", train.stage, "s1, s2 or s3")->required()->check(CLI::IsMember({"s1", "s2", "s3"}));
  t->add_option("--data", train.data, "Training samples file or directory (repeatable)")->required();
  t->add_option("--val", train.val, "Validation samples; default holds out 10% of --data");
  t->add_option("--config", train.config, "JSON config overlaid on the stage defaults");
  t->add_option("--resume", train.resume, "Checkpoint of the previous stage");
  t->add_option("--epoch-scale", train.epoch_scale, "Multiply epochs and drop epochs")->check(CLI::PositiveNumber);
  t->add_option("--mode", train.mode, "fusion or 3d-only")->check(CLI::IsMember({"fusion", "3d-only"}))->capture_default_str();
  auto* seed_opt = t->add_option("--seed", train_seed, "Seed for initialisation, sampling and hold-out");
  t->add_option("-o,--out", train.out, "Checkpoint path (default <stage>.ckpt)");
  t->add_option("--log", train.log, "Metric log (default <out>.log.jsonl)");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint (PCKh@0.5, MPJPE)");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", eval.data, "Samples file or directory")->required();
  e->add_option("-o,--out", eval.out, "Write <out>.json and <out>.txt");
  e->add_option("--decode", eval.decode, "argmax or soft")->check(CLI::IsMember({"argmax", "soft"}))->capture_default_str();
  e->add_flag("--per-joint", eval.per_joint, "Add one row per joint");

  RenderArgs render;
  auto* r = app.add_subcommand("render", "Draw the predicted pose: PNG overlay and SVG 3D wireframe");
  r->add_option("--checkpoint", render.checkpoint, "Checkpoint file")->required();
  r->add_option("--image", render.image, "Input image (PPM or PNG)");
  r->add_option("--data", render.data, "Samples file or directory, used with --sample");
  r->add_option("--sample", render.sample, "0-based sample index in --data");
  r->add_option("-o,--out", render.out, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitParse;
  }

  try {
    if (*c) {
      run_convert(convert);
    } else if (*s) {
      run_synth(synth);
    } else if (*t) {
      if (*seed_opt) {
        train.seed = train_seed;
      }
      run_train(train);
    } else if (*e) {
      run_eval(eval);
    } else if (*r) {
      run_render(render);
    }
  } catch (const Failure& f) {
    const char* msg = pf_last_error();
    if (msg[0] != '\0') {
      std::fprintf(stderr, "error (%s): %s\n", pf_status_name(f.status), msg);
    }
    return exit_code(f.status);
  }
  return kExitOk;
}
