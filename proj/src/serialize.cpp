#include "bilin/serialize.hpp"

#include <fstream>

#include "bilin/error.hpp"

namespace bilin {

using nlohmann::json;

namespace {

json kernel_to_json(const TabularKernel& k) {
  return {{"num_states", k.num_states}, {"num_actions", k.num_actions}, {"horizon", k.horizon}, {"p", k.p}, {"r", k.r}};
}

TabularKernel kernel_from_json(const json& j) {
  TabularKernel k(j.at("num_states").get<int>(), j.at("num_actions").get<int>(), j.at("horizon").get<int>());
  auto p = j.at("p").get<std::vector<double>>();
  auto r = j.at("r").get<std::vector<double>>();
  if (p.size() != k.p.size() || r.size() != k.r.size()) {
    throw Error(ErrorCode::SchemaMismatch, "kernel arrays do not match their dimensions");
  }
  k.p = std::move(p);
  k.r = std::move(r);
  return k;
}

}  // namespace

json class_to_json(const HypothesisClass& cls, const std::string& descriptor, const BilinearSpec* spec) {
  json doc;
  doc["schema"] = kClassSchema;
  doc["descriptor"] = descriptor;
  doc["size"] = cls.size();
  doc["truth_index"] = cls.truth_index ? json(*cls.truth_index) : json(nullptr);
  if (spec) {
    doc["family"] = to_string(spec->family);
    doc["phi_dim"] = spec->features ? spec->features->phi_dim() : 0;
    doc["psi_dim"] = spec->features ? spec->features->psi_dim() : 0;
  }
  json members = json::array();
  for (const auto& f : cls.members) {
    const auto& t = f.tables();
    json m;
    m["id"] = f.id();
    m["kind"] = to_string(f.kind());
    m["horizon"] = t.horizon;
    m["rows"] = t.rows;
    m["actions"] = t.actions;
    m["q"] = t.q;
    m["v"] = t.v;
    const auto& p = f.payload();
    json payload;
    payload["w"] = p.w;
    payload["theta"] = p.theta;
    payload["model"] = p.model;
    payload["kernel"] = p.kernel ? kernel_to_json(*p.kernel) : json(nullptr);
    m["payload"] = std::move(payload);
    members.push_back(std::move(m));
  }
  doc["members"] = std::move(members);
  return doc;
}

LoadedClass class_from_json(const json& doc, std::shared_ptr<const StateIndexer> indexer) {
  try {
    if (doc.at("schema").get<std::string>() != kClassSchema) {
      throw Error(ErrorCode::SchemaMismatch, "unexpected class schema");
    }
    LoadedClass out;
    out.descriptor = doc.at("descriptor").get<std::string>();
    for (const auto& m : doc.at("members")) {
      ValueTables t;
      t.horizon = m.at("horizon").get<int>();
      t.rows = m.at("rows").get<int>();
      t.actions = m.at("actions").get<int>();
      t.q = m.at("q").get<std::vector<double>>();
      t.v = m.at("v").get<std::vector<double>>();
      const std::size_t cells = static_cast<std::size_t>(t.horizon) * t.rows;
      if (t.q.size() != cells * t.actions || t.v.size() != cells + t.rows) {
        throw Error(ErrorCode::SchemaMismatch, "value tables do not match their dimensions");
      }
      const auto& pj = m.at("payload");
      Payload p;
      p.w = pj.at("w").get<std::vector<std::vector<double>>>();
      p.theta = pj.at("theta").get<std::vector<std::vector<double>>>();
      p.model = pj.at("model").get<std::vector<double>>();
      if (!pj.at("kernel").is_null()) p.kernel = std::make_shared<const TabularKernel>(kernel_from_json(pj.at("kernel")));
      out.cls.members.emplace_back(m.at("id").get<int>(), parse_hypothesis_kind(m.at("kind").get<std::string>()),
                                   std::move(t), std::move(p), indexer);
    }
    if (out.cls.size() != doc.at("size").get<std::size_t>()) {
      throw Error(ErrorCode::SchemaMismatch, "member count does not match size");
    }
    if (!doc.at("truth_index").is_null()) out.cls.truth_index = doc.at("truth_index").get<int>();
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed class document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

void save_class(const std::string& path, const HypothesisClass& cls, const std::string& descriptor,
                const BilinearSpec* spec) {
  write_json_file(path, class_to_json(cls, descriptor, spec));
}

LoadedClass load_class(const std::string& path, std::shared_ptr<const StateIndexer> indexer) {
  return class_from_json(read_json_file(path), std::move(indexer));
}

}  // namespace bilin
