#include "pica/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pica/kernels.hpp"
#include "pica/rng.hpp"
#include "pica/text_io.hpp"

namespace pica {

double ProjectionHead::tau() const { return std::exp(log_tau); }

void ProjectionHead::clamp_tau() {
  log_tau = std::clamp(log_tau, std::log(kTauMin), std::log(kTauMax));
}

ProjectionHead init_head(int d_v, int d_t, std::uint64_t seed) {
  if (d_v < 1 || d_t < 1) throw std::invalid_argument("init_head: bad dims");
  ProjectionHead head;
  head.W = Matrix(d_t, d_v);
  head.b.assign(d_t, 0.0);
  head.log_tau = std::log(kTauInit);
  Engine rng = make_engine(derive_seed(seed, stream::head_init));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_v));
  for (double& w : head.W.data) w = scale * gaussian(rng);
  return head;
}

Vec project(const ProjectionHead& head, const Vec& f) {
  if (static_cast<int>(f.size()) != head.d_v()) {
    throw std::invalid_argument("project: dimension mismatch");
  }
  Vec w(head.d_t());
  for (int t = 0; t < head.d_t(); ++t) {
    w[t] = kernels::dot(head.W.row(t), f.data(), f.size()) + head.b[t];
  }
  return w;
}

std::pair<Vec, Vec> project_pair(const ProjectionHead& head, const Vec& f_clean,
                                 const Vec& f_aug) {
  return {project(head, f_clean), project(head, f_aug)};
}

Matrix project_batch(const ProjectionHead& head, const Matrix& F) {
  if (static_cast<int>(F.cols) != head.d_v()) {
    throw std::invalid_argument("project_batch: dimension mismatch");
  }
  Matrix out;
  kernels::affine_batch(head.W, head.b, F, out);
  return out;
}

std::string head_to_text(const ProjectionHead& head) {
  std::string out = "pica-head 1\n";
  out += "dims " + std::to_string(head.d_v()) + " " + std::to_string(head.d_t()) + "\n";
  out += "log_tau " + g17(head.log_tau) + "\n";
  for (int t = 0; t < head.d_t(); ++t) {
    out += "w_row";
    append_values(out, head.W.row_span(t));
    out.push_back('\n');
  }
  out += "bias";
  append_values(out, head.b);
  out += "\nend\n";
  return out;
}

namespace {
std::vector<std::string> head_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string tok;
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t') {
      if (!tok.empty()) tokens.push_back(std::move(tok));
      tok.clear();
    } else {
      tok.push_back(c);
    }
  }
  if (!tok.empty()) tokens.push_back(std::move(tok));
  return tokens;
}
}  // namespace

ProjectionHead head_from_text(const std::string& text) {
  const auto tokens = head_tokens(text);
  std::size_t pos = 0;
  auto next = [&](const char* what) -> const std::string& {
    if (pos >= tokens.size()) {
      throw std::runtime_error(std::string(what) + ": unexpected end of input");
    }
    return tokens[pos++];
  };
  auto expect = [&](const char* lit) {
    if (next(lit) != lit) throw std::runtime_error(std::string("expected ") + lit);
  };

  expect("pica-head");
  if (parse_int(next("version"), "version") != 1) {
    throw std::runtime_error("head_from_text: unsupported version");
  }
  expect("dims");
  const int d_v = static_cast<int>(parse_int(next("d_v"), "d_v"));
  const int d_t = static_cast<int>(parse_int(next("d_t"), "d_t"));
  if (d_v < 1 || d_t < 1) throw std::runtime_error("head_from_text: bad dims");
  ProjectionHead head;
  expect("log_tau");
  head.log_tau = parse_double(next("log_tau"), "log_tau");
  head.W = Matrix(d_t, d_v);
  for (int t = 0; t < d_t; ++t) {
    expect("w_row");
    for (int i = 0; i < d_v; ++i) {
      head.W.at(t, i) = parse_double(next("w"), "w");
    }
  }
  expect("bias");
  head.b.resize(d_t);
  for (int t = 0; t < d_t; ++t) head.b[t] = parse_double(next("b"), "b");
  expect("end");
  return head;
}

}  // namespace pica
