#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdde/error.hpp"
#include "sdde/io.hpp"

namespace sdde {

json segment_to_json(const SegmentC1& phi) {
  if (!phi.grid().is_uniform()) {
    throw Error(ErrorCode::invalid_argument, "only uniform-grid segments serialize");
  }
  json values = json::array(), derivs = json::array();
  for (int i = 0; i < phi.nodes(); ++i) {
    json v = json::array(), d = json::array();
    for (int c = 0; c < phi.dim(); ++c) {
      v.push_back(phi.values()(i, c));
      d.push_back(phi.derivs()(i, c));
    }
    values.push_back(std::move(v));
    derivs.push_back(std::move(d));
  }
  return json{{"grid", {{"r", phi.grid().r()}, {"M", phi.grid().size()}}},
              {"n", phi.dim()},
              {"values", std::move(values)},
              {"derivs", std::move(derivs)}};
}

SegmentC1 segment_from_json(const json& doc, const GridPtr& grid) {
  try {
    const double r = doc.at("grid").at("r").get<double>();
    const int m = doc.at("grid").at("M").get<int>();
    const int n = doc.at("n").get<int>();
    GridPtr g = grid;
    if (g) {
      if (!g->is_uniform() || g->size() != m || g->r() != r) {
        throw Error(ErrorCode::grid_mismatch, "segment document grid differs from the model grid");
      }
    } else {
      g = Grid::uniform(r, m);
    }
    const auto& values = doc.at("values");
    const auto& derivs = doc.at("derivs");
    if (!values.is_array() || !derivs.is_array() || static_cast<int>(values.size()) != m ||
        static_cast<int>(derivs.size()) != m) {
      throw Error(ErrorCode::dimension_mismatch, "values/derivs must hold one row per node");
    }
    Mat v(m, n), d(m, n);
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(values[static_cast<std::size_t>(i)].size()) != n ||
          static_cast<int>(derivs[static_cast<std::size_t>(i)].size()) != n) {
        throw Error(ErrorCode::dimension_mismatch, "row length differs from n");
      }
      for (int c = 0; c < n; ++c) {
        v(i, c) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
        d(i, c) = derivs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
      }
    }
    return SegmentC1(std::move(g), std::move(v), std::move(d));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("malformed segment document: ") + e.what());
  }
}

void write_segment_csv(std::ostream& out, const SegmentC1& phi, int samples_per_interval) {
  out << "t";
  for (int c = 1; c <= phi.dim(); ++c) out << ",x" << c;
  for (int c = 1; c <= phi.dim(); ++c) out << ",dx" << c;
  out << '\n' << std::setprecision(17);
  for (double t : refinement_times(phi.grid(), samples_per_interval)) {
    const Vec v = phi.eval(t), d = phi.eval_deriv(t);
    out << t;
    for (int c = 0; c < phi.dim(); ++c) out << ',' << v[c];
    for (int c = 0; c < phi.dim(); ++c) out << ',' << d[c];
    out << '\n';
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::io, "rename to " + target.string() + " failed: " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace sdde
