#include <catch2/catch_amalgamated.hpp>

#include "fusereg/config.hpp"

using namespace fusereg;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("config text parses keys, trims whitespace and strips comments") {
  const ConfigMap cfg = ConfigMap::parse_text(
      "# full-line comment\n"
      "task = fuse\n"
      "  synth.model =  gaussian  # trailing comment\n"
      "\r\n"
      "pair = a, b\n",
      "test");
  REQUIRE(cfg.has("task"));
  REQUIRE(cfg.get("task") == "fuse");
  REQUIRE(cfg.get("synth.model") == "gaussian");
  REQUIRE(cfg.get("pair") == "a, b");  // internal spaces survive
  REQUIRE_FALSE(cfg.has("missing"));
}

TEST_CASE("config parse errors carry the line number") {
  REQUIRE_THROWS_WITH(ConfigMap::parse_text("task fuse\n", "test"),
                      "test line 1: expected key = value");
  REQUIRE_THROWS_WITH(ConfigMap::parse_text("ok = 1\n = 2\n", "test"),
                      "test line 2: empty key");
  REQUIRE_THROWS_WITH(ConfigMap::parse_text("a = 1\na = 2\n", "test"),
                      "test line 2: duplicate key 'a'");
  REQUIRE_THROWS_AS(ConfigMap::parse_file("/nonexistent/f.cfg"), config_error);
}

TEST_CASE("typed getters convert and validate") {
  const ConfigMap cfg = ConfigMap::parse_text(
      "n = 42\nx = 2.5\nflag = yes\noff = false\nvec = 1, 2.5, -3\n"
      "mat = 1, 0; 0, 1\nragged = 1, 2; 3\nbadnum = 1.2.3\nbadint = 7x\n",
      "test");
  REQUIRE(cfg.integer("n") == 42);
  REQUIRE(cfg.number("x") == 2.5);
  REQUIRE(cfg.number_or("absent", 9.0) == 9.0);
  REQUIRE(cfg.integer_or("absent", 4) == 4);
  REQUIRE(cfg.flag_or("flag", false));
  REQUIRE_FALSE(cfg.flag_or("off", true));
  REQUIRE(cfg.flag_or("absent", true));
  REQUIRE(cfg.get_or("absent", "dflt") == "dflt");

  const Vector v = cfg.vector("vec");
  REQUIRE(v.size() == 3);
  REQUIRE(v(2) == -3.0);

  const Matrix m = cfg.matrix("mat");
  REQUIRE(m.rows() == 2);
  REQUIRE(m(0, 0) == 1.0);
  REQUIRE(m(1, 1) == 1.0);

  REQUIRE_THROWS_WITH(cfg.matrix("ragged"), "config key ragged: ragged matrix rows");
  REQUIRE_THROWS_AS(cfg.number("badnum"), config_error);
  REQUIRE_THROWS_WITH(cfg.integer("badint"), "config key badint: '7x' is not an integer");
  REQUIRE_THROWS_WITH(cfg.get("gone"), "missing config key 'gone'");
}

TEST_CASE("unconsumed keys are reported after a run") {
  const ConfigMap cfg = ConfigMap::parse_text("a = 1\nb = 2\nc = 3\n", "test");
  cfg.get("b");
  const auto leftover = cfg.unconsumed();
  REQUIRE(leftover == std::vector<std::string>{"a", "c"});
  REQUIRE_THROWS_WITH(cfg.require_all_consumed(), "unknown config key(s): a c");
  cfg.get("a");
  cfg.get("c");
  REQUIRE_NOTHROW(cfg.require_all_consumed());
}

TEST_CASE("function classes are built from config groups") {
  const ConfigMap cfg = ConfigMap::parse_text(
      "classA.kind = linear\n"
      "classB.kind = basis\n"
      "classB.basis = x0, x0^2\n"
      "classC.kind = nonparametric\n"
      "classC.bandwidth = 0.4\n"
      "classC.order = 0\n"
      "classD.kind = zero\n"
      "classE.kind = sparse\n"
      "classF.kind = basis\n"
      "classF.basis = x9\n",
      "test");

  REQUIRE(class_from_config(cfg, "classA", 1, 1).kind() == ClassKind::Linear);
  const FunctionClass b = class_from_config(cfg, "classB", 1, 1);
  REQUIRE(b.kind() == ClassKind::Basis);
  REQUIRE(b.basis_maps().size() == 2);
  const FunctionClass c = class_from_config(cfg, "classC", 1, 1);
  REQUIRE(c.kind() == ClassKind::Nonparametric);
  REQUIRE(c.kernel_config().bandwidth_constant == 0.4);
  REQUIRE(c.kernel_config().order == 0);
  REQUIRE(class_from_config(cfg, "classD", 1, 1).kind() == ClassKind::Zero);
  REQUIRE_THROWS_WITH(class_from_config(cfg, "classE", 1, 1),
                      ContainsSubstring("unknown class kind 'sparse'"));
  REQUIRE_THROWS_WITH(class_from_config(cfg, "classF", 1, 1),
                      ContainsSubstring("classF.basis"));
}

TEST_CASE("kernel settings are validated from config") {
  const ConfigMap good = ConfigMap::parse_text("k.bandwidth = 0.2\nk.order = 1\n", "test");
  const KernelConfig kc = kernel_from_config(good, "k");
  REQUIRE(kc.bandwidth_constant == 0.2);
  REQUIRE(kc.order == 1);

  const ConfigMap neg = ConfigMap::parse_text("k.bandwidth = -1\n", "test");
  REQUIRE_THROWS_WITH(kernel_from_config(neg, "k"),
                      "config key k.bandwidth: must be positive");
  const ConfigMap ord = ConfigMap::parse_text("k.order = 2\n", "test");
  REQUIRE_THROWS_WITH(kernel_from_config(ord, "k"), "config key k.order: must be 0 or 1");
}
