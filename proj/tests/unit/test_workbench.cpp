#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "zsl/cli.hpp"
#include "zsl/config.hpp"
#include "zsl/dataset.hpp"
#include "zsl/error.hpp"
#include "zsl/metrics.hpp"
#include "zsl/synthetic.hpp"
#include "zsl/text_io.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static const fs::path root = [] {
    auto d = fs::temp_directory_path() / "zsl_workbench_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return root / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void check_same(const ZslDataset& a, const ZslDataset& b) {
  CHECK(a.features == b.features);
  CHECK(a.attributes == b.attributes);
  CHECK(a.labels == b.labels);
  CHECK(a.split == b.split);
  CHECK(a.class_names == b.class_names);
  CHECK(a.class_seen == b.class_seen);
}

SyntheticSpec tiny_spec() {
  SyntheticSpec s;
  s.n_seen = 4;
  s.n_unseen = 2;
  s.feature_dim = 8;
  s.attribute_dim = 4;
  s.examples_per_class = 10;
  return s;
}

// Unseen test rows classified by the nearest noise-free class feature mean.
double class_mean_oracle(const SyntheticDataset& sd) {
  const ZslDataset& ds = sd.dataset;
  const auto unseen = ds.unseen_classes();
  std::vector<int> pred, truth;
  for (auto r : ds.rows_with(Split::kTestUnseen)) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c : unseen) {
      double d = 0.0;
      for (std::size_t j = 0; j < ds.feature_dim(); ++j) {
        const double diff = ds.features(r, j) - sd.class_feature_means(c, j);
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    pred.push_back(best);
    truth.push_back(ds.labels[r]);
  }
  return per_class_top1(pred, truth).mean;
}

int cli(const std::vector<std::string>& args) { return run_cli(args); }

std::vector<std::string> tiny_train_flags() {
  return {"--set", "iterations=30", "--set", "batch_size=8", "--set", "latent_dim=4",
          "--set", "visual_hidden=8", "--set", "semantic_hidden=8", "--set", "learning_rate=0.001"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

}  // namespace

TEST_SUITE("dataset files") {
  TEST_CASE("save then load round-trips exactly, text and binary features") {
    const ZslDataset ds = make_synthetic(tiny_spec()).dataset;
    for (bool binary : {false, true}) {
      const fs::path dir = scratch(binary ? "rt_bin" : "rt_csv");
      save_dataset(ds, dir, binary);
      CHECK(fs::exists(dir / "features.bin") == binary);
      CHECK(fs::exists(dir / "features.csv") == !binary);
      check_same(load_dataset(dir), ds);
    }
  }

  TEST_CASE("invalid rows are rejected with their index") {
    const ZslDataset ds = make_synthetic(tiny_spec()).dataset;
    const fs::path dir = scratch("bad_rows");
    save_dataset(ds, dir);
    const std::string labels = slurp(dir / "labels.csv");

    // An unseen label on a train row: rows are seen-class first, so row 0.
    const std::size_t first_unseen_label = static_cast<std::size_t>(ds.unseen_classes().front());
    spit(dir / "labels.csv", std::to_string(first_unseen_label) + labels.substr(labels.find('\n')));
    try {
      load_dataset(dir);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 0") != std::string::npos);
    }

    spit(dir / "labels.csv", "0\nxyz" + labels.substr(labels.find('\n', 2)));
    try {
      load_dataset(dir);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    spit(dir / "labels.csv", labels);
    CHECK_NOTHROW(load_dataset(dir));
  }

  TEST_CASE("attribute rows must match the class count") {
    const ZslDataset ds = make_synthetic(tiny_spec()).dataset;
    const fs::path dir = scratch("bad_attrs");
    save_dataset(ds, dir);
    const std::string attrs = slurp(dir / "attributes.csv");
    spit(dir / "attributes.csv", attrs.substr(attrs.find('\n') + 1));
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }

  TEST_CASE("missing file and doubled feature files") {
    const ZslDataset ds = make_synthetic(tiny_spec()).dataset;
    const fs::path dir = scratch("missing");
    save_dataset(ds, dir);
    write_binary_matrix(ds.features, dir / "features.bin");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    fs::remove(dir / "features.bin");
    fs::remove(dir / "split.csv");
    CHECK_THROWS_AS(load_dataset(dir), DataError);
  }

  TEST_CASE("binary matrix rejects bad magic and truncation") {
    const fs::path p = scratch("m.bin");
    Matrix m(3, 2);
    m(2, 1) = 4.5;
    write_binary_matrix(m, p);
    CHECK(read_binary_matrix(p) == m);
    const std::string bytes = slurp(p);
    spit(p, bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(read_binary_matrix(p), FormatError);
    spit(p, "X" + bytes.substr(1));
    CHECK_THROWS_AS(read_binary_matrix(p), FormatError);
  }
}

TEST_SUITE("class attributes") {
  TEST_CASE("averaging one row per class is the identity") {
    Rng rng(1);
    const Matrix a = zsl::testing::random_matrix(3, 5, rng);
    CHECK(average_class_attributes(a, std::vector<int>{0, 1, 2}, 3) == a);
  }

  TEST_CASE("two images average elementwise") {
    Matrix a(2, 2);
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    const Matrix avg = average_class_attributes(a, std::vector<int>{0, 0}, 1);
    CHECK(avg(0, 0) == 1.0);
    CHECK(avg(0, 1) == 1.0);
  }

  TEST_CASE("matches a direct per-class loop") {
    Rng rng(2);
    const Matrix a = zsl::testing::random_matrix(40, 6, rng);
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) labels.push_back((i * 7) % 5);
    const Matrix avg = average_class_attributes(a, labels, 5);
    for (int c = 0; c < 5; ++c) {
      for (std::size_t j = 0; j < 6; ++j) {
        double s = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < 40; ++i) {
          if (labels[i] == c) {
            s += a(i, j);
            ++n;
          }
        }
        CHECK(avg(static_cast<std::size_t>(c), j) == doctest::Approx(s / n).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("a class without images and an out-of-range label are errors") {
    const Matrix a(2, 3);
    CHECK_THROWS_AS(average_class_attributes(a, std::vector<int>{0, 0}, 2), DataError);
    CHECK_THROWS_AS(average_class_attributes(a, std::vector<int>{0, 5}, 2), DataError);
  }
}

TEST_SUITE("synthetic benchmark") {
  TEST_CASE("noise-free features are classified perfectly by their class means") {
    SyntheticSpec s = tiny_spec();
    s.feature_noise = 0.0;
    CHECK(class_mean_oracle(make_synthetic(s)) == 1.0);
  }

  TEST_CASE("default recipe is solvable by the class-mean oracle") {
    CHECK(class_mean_oracle(make_synthetic(SyntheticSpec{})) >= 0.95);
  }

  TEST_CASE("fixed seed reproduces, different seed differs") {
    const SyntheticSpec s = tiny_spec();
    check_same(make_synthetic(s).dataset, make_synthetic(s).dataset);
    SyntheticSpec other = s;
    other.seed += 1;
    CHECK(make_synthetic(other).dataset.features != make_synthetic(s).dataset.features);
  }

  TEST_CASE("layout: seen classes first, unseen classes never in training") {
    const SyntheticSpec s = tiny_spec();
    const ZslDataset ds = make_synthetic(s).dataset;
    CHECK(ds.num_classes() == s.n_seen + s.n_unseen);
    CHECK(ds.features.rows() == ds.num_classes() * s.examples_per_class);
    for (std::size_t c = 0; c < ds.num_classes(); ++c) CHECK(ds.class_seen[c] == (c < s.n_seen));
    std::size_t test_seen = 0;
    for (std::size_t r = 0; r < ds.labels.size(); ++r) {
      if (ds.split[r] == Split::kTrainSeen) CHECK(ds.class_seen[static_cast<std::size_t>(ds.labels[r])]);
      test_seen += ds.split[r] == Split::kTestSeen;
    }
    CHECK(test_seen == s.n_seen * 2);  // round(0.2 * 10) per seen class
  }

  TEST_CASE("spec validation") {
    SyntheticSpec s = tiny_spec();
    s.n_seen = 1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = tiny_spec();
    s.feature_noise = -1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = tiny_spec();
    s.test_seen_fraction = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
}

TEST_SUITE("key value config") {
  TEST_CASE("comments, blanks, whitespace and overrides") {
    KeyValueConfig kv = KeyValueConfig::parse("# header\n\n a = 1 \nb=x # trailing\na = 2\n");
    CHECK(kv.get_uint("a") == 2u);
    CHECK(kv.get_string("b") == "x");
    kv.set_assignment("b=y");
    CHECK(kv.get_string("b") == "y");
    CHECK_NOTHROW(kv.require_all_used());
  }

  TEST_CASE("typed getters reject malformed values") {
    const KeyValueConfig kv = KeyValueConfig::parse("n = -3\nd = abc\nf = maybe\n");
    CHECK_THROWS_AS(kv.get_uint("n"), ConfigError);
    CHECK_THROWS_AS(kv.get_double("d"), ConfigError);
    CHECK_THROWS_AS(kv.get_bool("f"), ConfigError);
    CHECK_FALSE(kv.get_double("absent").has_value());
  }

  TEST_CASE("unused keys are reported") {
    const KeyValueConfig kv = KeyValueConfig::parse("learning_rate = 1\nlearnig_rate = 2\n");
    kv.get_double("learning_rate");
    try {
      kv.require_all_used();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("learnig_rate") != std::string::npos);
    }
  }

  TEST_CASE("malformed lines name their position") {
    try {
      KeyValueConfig::parse("a = 1\nnot an assignment\n", "x.cfg");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("x.cfg:2") != std::string::npos);
    }
  }

  TEST_CASE("synthetic spec reads its prefixed keys") {
    SyntheticSpec s;
    s.read(KeyValueConfig::parse("synth.n_seen = 3\nsynth.attribute_noise = 0.25\n"));
    CHECK(s.n_seen == 3);
    CHECK(s.attribute_noise == 0.25);
  }
}

TEST_SUITE("command line") {
  TEST_CASE("synth, train, eval, generate and export run end to end") {
    const fs::path data = scratch("cli_data");
    const fs::path ckpt = scratch("cli.ckpt");
    REQUIRE(cli({"synth", "-o", data.string(), "--set", "synth.n_seen=4", "--set", "synth.n_unseen=2",
                 "--set", "synth.feature_dim=8", "--set", "synth.attribute_dim=4", "--set",
                 "synth.examples_per_class=10"}) == 0);
    REQUIRE(cli(concat({"train", "-d", data.string(), "-o", ckpt.string()}, tiny_train_flags())) == 0);
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(ckpt.string() + ".runlog.tsv"));
    for (std::string mode : {"zsl", "gzsl_nn", "gzsl_generated"}) {
      const fs::path prefix = scratch("report_" + mode);
      REQUIRE(cli({"eval", "-k", ckpt.string(), "-d", data.string(), "-m", mode, "-o", prefix.string(),
                   "--set", "gen.samples_per_unseen_class=20"}) == 0);
      const std::string kv = slurp(prefix.string() + ".kv");
      CHECK(kv.find("U = ") != std::string::npos);
      CHECK(fs::exists(prefix.string() + ".txt"));
    }
    const fs::path latent = scratch("latent.csv");
    REQUIRE(cli({"generate", "-k", ckpt.string(), "-d", data.string(), "-o", latent.string(), "--set",
                 "gen.samples_per_unseen_class=10"}) == 0);
    // 2 unseen classes x 10 plus 4 seen classes x 5
    CHECK(text_lines(slurp(latent)).size() == 40);
    const fs::path emb = scratch("emb.csv");
    REQUIRE(cli({"export-embeddings", "-k", ckpt.string(), "-d", data.string(), "-o", emb.string(),
                 "--split", "test_unseen"}) == 0);
    const std::string emb_text = slurp(emb);
    const auto lines = text_lines(emb_text);
    CHECK(lines.size() == 20);
    CHECK(split_fields(lines.front()).size() == 4 + 1);
  }

  TEST_CASE("ablations emit one report per setting") {
    const fs::path data = scratch("abl_data");
    REQUIRE(cli({"synth", "-o", data.string(), "--set", "synth.n_seen=4", "--set", "synth.n_unseen=2",
                 "--set", "synth.feature_dim=8", "--set", "synth.attribute_dim=4"}) == 0);
    const fs::path dist = scratch("abl_dist");
    REQUIRE(cli(concat({"ablate", "distances", "-d", data.string(), "-o", dist.string()},
                       tiny_train_flags())) == 0);
    std::size_t kv_files = 0;
    for (const auto& e : fs::directory_iterator(dist)) kv_files += e.path().extension() == ".kv";
    CHECK(kv_files == 3);
    const fs::path emb = scratch("abl_emb");
    REQUIRE(cli(concat({"ablate", "embeddings", "-d", data.string(), "-o", emb.string()},
                       tiny_train_flags())) == 0);
    CHECK(fs::exists(emb / "embeddings_distribution.kv"));
    CHECK(fs::exists(emb / "embeddings_vector.kv"));
    CHECK(text_lines(slurp(emb / "summary.tsv")).size() == 2);
  }

  TEST_CASE("repeated runs write identical files apart from the timing header") {
    const fs::path data = scratch("det_data");
    REQUIRE(cli({"synth", "-o", data.string(), "--set", "synth.n_seen=4", "--set", "synth.n_unseen=2",
                 "--set", "synth.feature_dim=8", "--set", "synth.attribute_dim=4"}) == 0);
    std::vector<std::string> logs, reports;
    for (int run = 0; run < 2; ++run) {
      const fs::path ckpt = scratch("det" + std::to_string(run) + ".ckpt");
      const fs::path rep = scratch("det" + std::to_string(run));
      REQUIRE(cli(concat({"train", "-d", data.string(), "-o", ckpt.string()}, tiny_train_flags())) == 0);
      REQUIRE(cli({"eval", "-k", ckpt.string(), "-d", data.string(), "-m", "gzsl_generated", "-o",
                   rep.string(), "--set", "gen.samples_per_unseen_class=20"}) == 0);
      const std::string log = slurp(ckpt.string() + ".runlog.tsv");
      CHECK(log.rfind("# wall_clock", 0) == 0);
      logs.push_back(drop_first_line(log));
      reports.push_back(slurp(rep.string() + ".kv") + slurp(rep.string() + ".txt"));
      CHECK(slurp(ckpt) == slurp(scratch("det0.ckpt")));
    }
    CHECK(logs[0] == logs[1]);
    CHECK(reports[0] == reports[1]);
  }

  TEST_CASE("bad usage and runtime errors give nonzero exit codes") {
    CHECK(cli({"train", "--no-such-flag"}) != 0);
    CHECK(cli({"eval", "-k", scratch("absent.ckpt").string(), "-d", scratch("absent").string(), "-m", "zsl",
               "-o", scratch("x").string()}) != 0);
    CHECK(cli({"synth", "-o", scratch("bad_key").string(), "--set", "synth.n_sen=3"}) != 0);
  }
}
