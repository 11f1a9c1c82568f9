#include <doctest.h>

#include <fstream>

#include "bilin/envs.hpp"
#include "bilin/error.hpp"
#include "bilin/serialize.hpp"
#include "scratch.hpp"

using namespace bilin;
using nlohmann::json;

namespace {

void check_same(const HypothesisClass& a, const HypothesisClass& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.truth_index == b.truth_index);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.members[i];
    const auto& y = b.members[i];
    CHECK(x.id() == y.id());
    CHECK(x.kind() == y.kind());
    CHECK(x.tables().q == y.tables().q);
    CHECK(x.tables().v == y.tables().v);
    CHECK(x.payload().w == y.payload().w);
    CHECK(x.payload().theta == y.payload().theta);
    CHECK(x.payload().model == y.payload().model);
    CHECK(static_cast<bool>(x.payload().kernel) == static_cast<bool>(y.payload().kernel));
    if (x.payload().kernel && y.payload().kernel) {
      CHECK(x.payload().kernel->p == y.payload().kernel->p);
      CHECK(x.payload().kernel->r == y.payload().kernel->r);
    }
  }
}

ErrorCode load_error(const json& doc) {
  try {
    class_from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("document was accepted");
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_SUITE("serialize") {
  TEST_CASE("tabular classes round trip through files") {
    for (const std::string name : {"q_rank", "mixture", "factored", "bellman_complete"}) {
      CAPTURE(name);
      const auto b = make_bundle(name, {{"seed", 2}});
      const auto path = fixture::scratch_path(name + "_class.json");
      save_class(path, *b.cls, b.meta.descriptor(), b.spec.get());
      const auto loaded = load_class(path);
      CHECK(loaded.descriptor == b.meta.descriptor());
      check_same(*b.cls, loaded.cls);
      CHECK(read_json_file(path).at("schema") == kClassSchema);
    }
  }

  TEST_CASE("vector-state classes round trip with the planner indexer") {
    const auto b = make_knr(1, 2, 0.1, 2, 2, 3, 1, 0.1);
    const auto doc = class_to_json(*b.cls, b.meta.descriptor(), b.spec.get());
    const auto loaded = class_from_json(doc, b.cls->truth().indexer());
    check_same(*b.cls, loaded.cls);
    const State s0 = b.mdp->initial_state();
    for (std::size_t i = 0; i < b.cls->size(); ++i) {
      CHECK(loaded.cls.members[i].v_value(0, s0) == b.cls->members[i].v_value(0, s0));
    }
  }

  TEST_CASE("malformed documents are rejected") {
    const auto b = make_bundle("q_rank", {{"seed", 0}});
    const auto good = class_to_json(*b.cls, "q_rank");
    auto wrong_schema = good;
    wrong_schema["schema"] = "bilin.results/1";
    CHECK(load_error(wrong_schema) == ErrorCode::SchemaMismatch);
    auto missing = good;
    missing.erase("members");
    CHECK(load_error(missing) == ErrorCode::SchemaMismatch);
    auto short_table = good;
    short_table["members"][0]["q"] = json::array({1.0});
    CHECK(load_error(short_table) == ErrorCode::SchemaMismatch);
    auto wrong_size = good;
    wrong_size["size"] = 99;
    CHECK(load_error(wrong_size) == ErrorCode::SchemaMismatch);
    auto bad_kind = good;
    bad_kind["members"][0]["kind"] = "oracle";
    CHECK(load_error(bad_kind) == ErrorCode::SchemaMismatch);
    auto bad_type = good;
    bad_type["members"][0]["horizon"] = "three";
    CHECK(load_error(bad_type) == ErrorCode::SchemaMismatch);
  }

  TEST_CASE("unreadable files report schema errors") {
    const auto path = fixture::scratch_path("not_json.json");
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(read_json_file(path), Error);
    CHECK_THROWS_AS(load_class(fixture::scratch_path("absent.json")), Error);
  }
}
