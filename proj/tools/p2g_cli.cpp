// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "p2g/p2g.h"

namespace {

struct Args {
  std::string config, out, checkpoint, page, strategy, level, split = "eval";
  std::optional<std::uint64_t> seed;
  int k = 0;
  double beta = 0.0;
};

p2g_options to_options(const Args& a) {
  p2g_options o;
  p2g_options_init(&o);
  auto str = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  o.config_path = str(a.config);
  o.out_dir = str(a.out);
  o.checkpoint = str(a.checkpoint);
  o.page_path = str(a.page);
  o.strategy = str(a.strategy);
  o.level = str(a.level);
  o.split = str(a.split);
  o.has_seed = a.seed.has_value();
  o.seed = a.seed.value_or(0);
  o.knn_k = a.k;
  o.beta = a.beta;
  return o;
}

int exit_code(p2g_status s) {
  switch (s) {
    case P2G_OK: return 0;
    case P2G_ERR_CONFIG:
    case P2G_ERR_INVALID_ARGUMENT: return 2;
    case P2G_ERR_DATA: return 3;
    case P2G_ERR_NUMERIC: return 4;
    default: return 1;
  }
}

int report(p2g_status s) {
  if (s != P2G_OK) std::fprintf(stderr, "error (%s): %s\n", p2g_status_name(s), p2g_last_error());
  return exit_code(s);
}

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p2g: graph-based document layout analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", p2g_version());
  Args a;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", a.config, "run configuration (JSON)"); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", a.seed, "override the run seed"); };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", a.out, "output directory"); };
  auto add_strategy = [&](CLI::App* sub) {
    sub->add_option("--strategy", a.strategy, "graph sampler")->check(CLI::IsMember({"directional", "knn", "beta"}));
    sub->add_option("--k", a.k, "neighbors for the knn sampler")->check(CLI::PositiveNumber);
    sub->add_option("--beta", a.beta, "beta in (0, 1] for the beta-skeleton sampler");
  };
  auto add_level = [&](CLI::App* sub) {
    sub->add_option("--level", a.level, "FUNSD annotation level")->check(CLI::IsMember({"word", "entity"}));
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus (train/ and eval/ page files)");
  add_config(synth);
  add_seed(synth);
  add_out(synth);

  auto* sample = app.add_subcommand("sample", "sample a candidate graph for one page and render it as SVG");
  sample->add_option("--page", a.page, "page document")->required();
  add_config(sample);
  add_strategy(sample);
  add_out(sample);

  auto* train = app.add_subcommand("train", "train a model; writes checkpoints and per-epoch metrics");
  add_config(train);
  add_seed(train);
  add_out(train);
  add_strategy(train);
  add_level(train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_config(eval);
  eval->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
  eval->add_option("--split", a.split, "data split")->check(CLI::IsMember({"train", "eval"}));
  add_seed(eval);
  add_out(eval);
  add_strategy(eval);
  add_level(eval);

  auto* infer = app.add_subcommand("infer", "decode layout instances for one page (SVG + JSON)");
  add_config(infer);
  infer->add_option("--checkpoint", a.checkpoint, "checkpoint file")->required();
  infer->add_option("--page", a.page, "page document")->required();
  add_out(infer);
  add_strategy(infer);

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  add_config(gradcheck);
  add_seed(gradcheck);

  CLI11_PARSE(app, argc, argv);
  p2g_set_log_callback(print_line, nullptr);
  const p2g_options opts = to_options(a);

  if (*synth) {
    p2g_synth_summary s{};
    return report(p2g_synth(&opts, &s));
  }
  if (*sample) {
    p2g_sample_summary s{};
    return report(p2g_sample(&opts, &s));
  }
  if (*train) {
    p2g_train_summary s{};
    return report(p2g_train(&opts, &s));
  }
  if (*eval) {
    p2g_eval_summary s{};
    return report(p2g_evaluate(&opts, &s));
  }
  if (*infer) {
    size_t n = 0;
    return report(p2g_infer(&opts, &n));
  }
  if (*gradcheck) {
    p2g_gradcheck_summary s{};
    const p2g_status st = p2g_gradcheck(&opts, &s);
    if (st != P2G_OK) return report(st);
    std::printf("max_rel_error %.6e tolerance %.1e %s\n", s.max_rel_error, s.tolerance, s.passed ? "PASS" : "FAIL");
    return s.passed ? 0 : 4;
  }
  return 1;
}
