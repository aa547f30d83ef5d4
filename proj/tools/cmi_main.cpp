// Command-line front end: generate, pretrain, split, attack, sweep, report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cmi/cli/experiment.hpp"
#include "cmi/common/error.hpp"
#include "cmi/corpus/synthetic.hpp"

namespace fs = std::filesystem;
using cmi::cli::ExperimentConfig;

namespace {

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void AddConfigOptions(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.path, "JSON config file");
  cmd->add_option("-s,--set", args.overrides, "key=value override (repeatable, wins over the file)");
}

ExperimentConfig Resolve(const ConfigArgs& args) {
  ExperimentConfig config = args.path.empty() ? ExperimentConfig{} : ExperimentConfig::Load(args.path);
  for (const auto& o : args.overrides) config.ApplyOverride(o);
  config.Validate();
  return config;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw cmi::IoError("cannot write " + path.string());
}

nlohmann::json Seeds(std::uint64_t root) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : cmi::cli::SubSeeds(root)) j[name] = value;
  return j;
}

int Generate(std::size_t members, std::size_t nonmembers, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const auto bench = cmi::corpus::GenerateBenchmark(members, nonmembers, seed);
  cmi::corpus::WriteCorpus(dir / "members.jsonl", bench.members.snippets);
  cmi::corpus::WriteCorpus(dir / "nonmembers.jsonl", bench.nonmembers.snippets);
  std::cout << "wrote " << members << " members and " << nonmembers << " nonmembers to "
            << dir.string() << "\n";
  return 0;
}

int Pretrain(const ExperimentConfig& config) {
  if (config.members_path.empty()) throw cmi::ConfigError("members_path is required");
  const auto members = cmi::corpus::LoadCorpus(config.members_path, cmi::corpus::MembershipLabel::kMember);
  const auto target = cmi::cli::TrainTarget(members, config);
  const fs::path dir = fs::path(config.output_dir) / "target";
  cmi::cli::Manifest manifest(config.output_dir);
  for (const auto& f : cmi::cli::SaveTarget(target, dir)) manifest.Add(f);
  {
    std::ostringstream trace;
    trace << "step,loss\n";
    for (std::size_t i = 0; i < target.loss_trace.size(); ++i)
      trace << i << ',' << target.loss_trace[i] << '\n';
    WriteFile(dir / "loss_trace.csv", trace.str());
    manifest.Add(dir / "loss_trace.csv");
  }
  manifest.Write({{"tool", "cmi"}, {"verb", "pretrain"}, {"config", config.ToJson()}, {"seeds", Seeds(config.seed)}});
  std::printf("target saved to %s (final MLM loss %.4f)\n", dir.string().c_str(),
              target.loss_trace.empty() ? 0.0 : target.loss_trace.back());
  return 0;
}

int Split(const ExperimentConfig& config) {
  if (config.members_path.empty() || config.nonmembers_path.empty())
    throw cmi::ConfigError("members_path and nonmembers_path are required");
  const auto members = cmi::corpus::LoadCorpus(config.members_path, cmi::corpus::MembershipLabel::kMember);
  const auto nonmembers =
      cmi::corpus::LoadCorpus(config.nonmembers_path, cmi::corpus::MembershipLabel::kNonmember);
  const auto bundle = cmi::corpus::BuildSplits(members.snippets, nonmembers.snippets, config.setting(),
                                               config.EffectiveKnownFraction(), config.sizes, config.seed);
  auto problems = cmi::corpus::AuditBundle(bundle, members.snippets);
  for (const auto& pair : cmi::corpus::CheckNoOverlap(members.snippets, nonmembers.snippets).pairs)
    problems.push_back("member " + pair.member_id + " overlaps nonmember " + pair.nonmember_id +
                       (pair.name_match ? " (same function name)" : " (similar tokens)"));
  for (const auto& p : problems) std::cerr << "audit: " << p << "\n";
  fs::create_directories(config.output_dir);
  const fs::path path = fs::path(config.output_dir) / "splits.jsonl";
  cmi::corpus::WriteSplitManifest(path, bundle);
  cmi::cli::Manifest manifest(config.output_dir);
  manifest.Add(path);
  manifest.Write({{"tool", "cmi"}, {"verb", "split"}, {"config", config.ToJson()}, {"seeds", Seeds(config.seed)}});
  std::printf("train %zu, validation %zu, test %zu, known pool %zu -> %s\n", bundle.train.size(),
              bundle.validation.size(), bundle.test.size(), bundle.known_pool.size(),
              path.string().c_str());
  return problems.empty() ? 0 : 3;
}

int Report(const fs::path& path, bool csv) {
  std::ifstream in(path);
  if (!in) throw cmi::IoError("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  cmi::eval::AttackReport r;
  r.attack_name = j.at("attack").get<std::string>();
  r.setting = j.at("setting").get<std::string>();
  r.auc = j.at("auc").get<double>();
  r.acc = j.at("acc").get<double>();
  r.acc_member = j.at("acc_member").get<double>();
  r.acc_nonmember = j.at("acc_nonmember").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.n_test = j.at("n_test").get<std::size_t>();
  r.n_member = j.at("n_member").get<std::size_t>();
  r.n_nonmember = j.at("n_nonmember").get<std::size_t>();
  for (const auto& row : j.at("interval_rows")) {
    cmi::eval::IntervalRow ir;
    ir.feature = row.at("feature").get<std::string>();
    ir.interval_index = row.at("interval_index").get<int>();
    ir.lower = row.at("lower").get<double>();
    ir.upper = row.at("upper").get<double>();
    ir.count = row.at("count").get<std::size_t>();
    if (!row.at("mean_normalized_score").is_null())
      ir.mean_normalized_score = row.at("mean_normalized_score").get<double>();
    r.interval_rows.push_back(ir);
  }
  if (csv)
    r.WriteIntervalCsv(std::cout);
  else
    std::cout << r.ToTable();
  return 0;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Code membership inference toolkit"};
  app.require_subcommand(1);

  std::size_t gen_members = 2000, gen_nonmembers = 2000;
  std::uint64_t gen_seed = 42;
  std::string gen_out = "data";
  auto* generate = app.add_subcommand("generate", "Write a synthetic two-source benchmark corpus");
  generate->add_option("--members", gen_members, "member snippets");
  generate->add_option("--nonmembers", gen_nonmembers, "nonmember snippets");
  generate->add_option("--seed", gen_seed, "generator seed");
  generate->add_option("-o,--out", gen_out, "output directory");

  ConfigArgs pre_args, split_args, attack_args, sweep_args;
  auto* pretrain = app.add_subcommand("pretrain", "Train the target tokenizer and encoder");
  AddConfigOptions(pretrain, pre_args);
  auto* split = app.add_subcommand("split", "Build and audit the attack data splits");
  AddConfigOptions(split, split_args);
  auto* attack = app.add_subcommand("attack", "Run one attack end to end and write its report");
  AddConfigOptions(attack, attack_args);

  std::string axis, values;
  auto* sweep = app.add_subcommand("sweep", "Run an attack over several values of one axis");
  AddConfigOptions(sweep, sweep_args);
  sweep->add_option("--axis", axis, "known_fraction | kd_loss | layer_selection")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  std::string report_path;
  bool report_csv = false;
  auto* report = app.add_subcommand("report", "Print a saved report");
  report->add_option("path", report_path, "report.json")->required();
  report->add_flag("--intervals", report_csv, "print the interval rows as CSV");

  auto* keys = app.add_subcommand("keys", "List every config key with its default");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*generate) return Generate(gen_members, gen_nonmembers, gen_seed, gen_out);
    if (*pretrain) return Pretrain(Resolve(pre_args));
    if (*split) return Split(Resolve(split_args));
    if (*attack) {
      const auto r = cmi::cli::RunExperiment(Resolve(attack_args));
      std::cout << r.ToTable();
      return 0;
    }
    if (*sweep) {
      const auto reports = cmi::cli::RunSweep(Resolve(sweep_args), cmi::cli::ParseSweepAxis(axis),
                                              SplitList(values));
      for (const auto& r : reports) std::printf("%s auc %.4f\n", r.attack_name.c_str(), r.auc);
      return 0;
    }
    if (*report) return Report(report_path, report_csv);
    if (*keys) {
      for (const auto& [key, help] : ExperimentConfig::KeyHelp())
        std::printf("%-20s %s\n", key.c_str(), help.c_str());
      return 0;
    }
  } catch (const cmi::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 4;
  } catch (const cmi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
