#include "fibdim/infotheory.hpp"

#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"
#include "fibdim/flag.hpp"
#include "fibdim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace fibdim {

namespace {

constexpr double kNormalizationTol = 1e-14;
constexpr double kSemicontinuitySlack = 1e-10;

std::vector<std::size_t> sizes_of(const std::vector<Variable>& vars) {
  std::vector<std::size_t> s;
  for (const auto& v : vars) s.push_back(v.alphabet.size());
  return s;
}

// sum p log(p / (row_p * col_p)) over a rows x cols table.
double table_information(const std::vector<double>& t, std::size_t rows, std::size_t cols) {
  std::vector<double> pr(rows, 0.0);
  std::vector<double> pc(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      pr[r] += t[r * cols + c];
      pc[c] += t[r * cols + c];
    }
  }
  CompensatedSum sum;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double p = t[r * cols + c];
      if (p > 0.0) sum.add(p * std::log(p / (pr[r] * pc[c])));
    }
  }
  return std::max(sum.value(), 0.0);
}

void require_disjoint(const std::vector<const VariableSet*>& sets) {
  std::vector<std::string> all;
  for (const auto* s : sets) all.insert(all.end(), s->begin(), s->end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw Error(ErrorKind::InvalidArgument, "information: variable groups must be disjoint");
  }
}

VariableSet concat(const VariableSet& a, const VariableSet& b) {
  VariableSet out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::size_t product(const std::vector<std::size_t>& s, std::size_t from, std::size_t to) {
  std::size_t p = 1;
  for (std::size_t k = from; k < to; ++k) p *= s[k];
  return p;
}

// Sharp bound on |H(P) - H(Q)| over n symbols at total variation t.
double entropy_modulus(double t, std::size_t n) {
  if (n < 2 || t <= 0.0) return 0.0;
  const double cap = 1.0 - 1.0 / static_cast<double>(n);
  if (t >= cap) return std::log(static_cast<double>(n));
  const double h = -t * std::log(t) - (1.0 - t) * std::log1p(-t);
  return t * std::log(static_cast<double>(n - 1)) + h;
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<Variable> variables, std::vector<double> table)
    : variables_(std::move(variables)), table_(std::move(table)) {
  if (variables_.empty() || variables_.size() > static_cast<std::size_t>(kMaxJointVariables)) {
    throw Error(ErrorKind::InvalidArgument, "joint: between 1 and 4 variables");
  }
  std::size_t cells = 1;
  for (const auto& v : variables_) {
    if (v.alphabet.empty() || v.alphabet.size() > kMaxAlphabet) {
      throw Error(ErrorKind::InvalidArgument, "joint: variable '" + v.name + "' needs 1 to 64 symbols");
    }
    if (std::count_if(variables_.begin(), variables_.end(), [&](const Variable& o) { return o.name == v.name; }) > 1) {
      throw Error(ErrorKind::InvalidArgument, "joint: duplicate variable '" + v.name + "'");
    }
    cells *= v.alphabet.size();
  }
  if (table_.size() != cells) throw Error(ErrorKind::InvalidArgument, "joint: table size does not match alphabets");
  CompensatedSum total;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "joint: negative or non-finite entry");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > kNormalizationTol) {
    throw Error(ErrorKind::InvalidArgument, "joint: table sums to " + format_double(total.value()) + ", not 1");
  }
}

int DiscreteJoint::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < variables_.size(); ++k) {
    if (variables_[k].name == name) return static_cast<int>(k);
  }
  throw Error(ErrorKind::InvalidArgument, "joint: no variable named '" + name + "'");
}

double DiscreteJoint::probability(const std::vector<std::size_t>& symbols) const {
  if (symbols.size() != variables_.size()) throw Error(ErrorKind::InvalidArgument, "joint: wrong symbol count");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    if (symbols[k] >= variables_[k].alphabet.size()) throw Error(ErrorKind::InvalidArgument, "joint: symbol out of range");
    idx = idx * variables_[k].alphabet.size() + symbols[k];
  }
  return table_[idx];
}

DiscreteJoint DiscreteJoint::marginal(const VariableSet& keep) const {
  if (keep.empty()) throw Error(ErrorKind::InvalidArgument, "joint: marginal needs at least one variable");
  const std::vector<std::size_t> sizes = sizes_of(variables_);
  const std::size_t m = sizes.size();
  std::vector<int> pos;
  std::vector<Variable> out_vars;
  for (const auto& name : keep) {
    pos.push_back(index_of(name));
    out_vars.push_back(variables_[static_cast<std::size_t>(pos.back())]);
  }
  // Stride of each source variable inside the output table (0 if summed out).
  std::vector<std::size_t> out_stride(m, 0);
  std::size_t s = 1;
  for (std::size_t k = keep.size(); k-- > 0;) {
    out_stride[static_cast<std::size_t>(pos[k])] = s;
    s *= sizes[static_cast<std::size_t>(pos[k])];
  }
  std::vector<double> out(s, 0.0);
  std::vector<std::size_t> digit(m, 0);
  std::size_t target = 0;
  for (double p : table_) {
    out[target] += p;
    // Odometer step, last variable fastest.
    for (std::size_t k = m; k-- > 0;) {
      if (++digit[k] < sizes[k]) {
        target += out_stride[k];
        break;
      }
      target -= out_stride[k] * (sizes[k] - 1);
      digit[k] = 0;
    }
  }
  // Renormalize the rounding of the summation away.
  CompensatedSum total;
  for (double p : out) total.add(p);
  for (double& p : out) p /= total.value();
  return DiscreteJoint(std::move(out_vars), std::move(out));
}

DiscreteJoint make_joint(const std::vector<std::string>& names, const std::vector<std::size_t>& sizes,
                         std::vector<double> table) {
  if (names.size() != sizes.size()) throw Error(ErrorKind::InvalidArgument, "joint: names and sizes differ");
  std::vector<Variable> vars;
  for (std::size_t k = 0; k < names.size(); ++k) {
    Variable v{names[k], {}};
    for (std::size_t s = 0; s < sizes[k]; ++s) v.alphabet.push_back(std::to_string(s));
    vars.push_back(std::move(v));
  }
  return DiscreteJoint(std::move(vars), std::move(table));
}

double entropy(const DiscreteJoint& j, const VariableSet& vars) {
  const DiscreteJoint m = j.marginal(vars);
  CompensatedSum sum;
  for (double p : m.table()) {
    if (p > 0.0) sum.add(-p * std::log(p));
  }
  return sum.value();
}

double mutual_information(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y) {
  return conditional_mutual_information(j, x, y, {});
}

double conditional_mutual_information(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y,
                                      const VariableSet& w) {
  if (x.empty() || y.empty()) throw Error(ErrorKind::InvalidArgument, "information: X and Y must be non-empty");
  require_disjoint({&x, &y, &w});
  const DiscreteJoint m = j.marginal(concat(concat(w, x), y));
  const std::vector<std::size_t> sizes = sizes_of(m.variables());
  const std::size_t nw = product(sizes, 0, w.size());
  const std::size_t nx = product(sizes, w.size(), w.size() + x.size());
  const std::size_t ny = product(sizes, w.size() + x.size(), sizes.size());
  const std::vector<double>& t = m.table();
  CompensatedSum total;
  std::vector<double> block(nx * ny);
  for (std::size_t b = 0; b < nw; ++b) {
    CompensatedSum pw;
    for (std::size_t c = 0; c < nx * ny; ++c) pw.add(t[b * nx * ny + c]);
    if (!(pw.value() > 0.0)) continue;
    for (std::size_t c = 0; c < nx * ny; ++c) block[c] = t[b * nx * ny + c] / pw.value();
    total.add(pw.value() * table_information(block, nx, ny));
  }
  return total.value();
}

ChainRuleCheck chain_rule_check(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y,
                                const VariableSet& z, const VariableSet& w) {
  ChainRuleCheck c;
  c.lhs = conditional_mutual_information(j, x, concat(y, z), w);
  c.rhs = conditional_mutual_information(j, x, y, concat(z, w)) + conditional_mutual_information(j, x, z, w);
  c.residual = std::fabs(c.lhs - c.rhs);
  return c;
}

double density_form_information(const DiscreteJoint& xy, const std::vector<double>& px,
                                const std::vector<double>& py) {
  const auto& vars = xy.variables();
  if (vars.size() != 2 || vars[0].alphabet.size() != px.size() || vars[1].alphabet.size() != py.size()) {
    throw Error(ErrorKind::InvalidArgument, "density form: joint must be of (X, Y) with matching marginals");
  }
  CompensatedSum sum;
  for (std::size_t a = 0; a < px.size(); ++a) {
    for (std::size_t b = 0; b < py.size(); ++b) {
      const double p = xy.table()[a * py.size() + b];
      if (!(p > 0.0)) continue;
      const double q = px[a] * py[b];
      if (!(q > 0.0)) {
        throw Error(ErrorKind::AbsolutelyContinuousViolation,
                    "joint charges the product-null cell (" + vars[0].name + "=" + vars[0].alphabet[a] + ", " +
                        vars[1].name + "=" + vars[1].alphabet[b] + ") with mass " + format_double(p));
      }
      sum.add(p * std::log(p / q));
    }
  }
  return sum.value();
}

GypCheck gyp_check(const DiscreteJoint& j, const std::string& x, const std::string& y) {
  const DiscreteJoint xy = j.marginal({x, y});
  GypCheck g;
  g.partition_form = entropy(j, {x}) + entropy(j, {y}) - entropy(j, {x, y});
  g.density_form = density_form_information(xy, j.marginal({x}).table(), j.marginal({y}).table());
  g.residual = std::fabs(g.partition_form - g.density_form);
  return g;
}

SemicontinuityReport semicontinuity_smoke(const std::vector<DiscreteJoint>& sequence, const DiscreteJoint& limit,
                                          const VariableSet& x, const VariableSet& y) {
  if (sequence.empty()) throw Error(ErrorKind::InvalidArgument, "semicontinuity: empty sequence");
  SemicontinuityReport rep;
  rep.limit_value = mutual_information(limit, x, y);
  const std::size_t nx = limit.marginal(x).cells();
  const std::size_t ny = limit.marginal(y).cells();
  for (const auto& j : sequence) {
    if (j.cells() != limit.cells()) throw Error(ErrorKind::DimensionMismatch, "semicontinuity: table shapes differ");
    const double value = mutual_information(j, x, y);
    CompensatedSum tv;
    for (std::size_t c = 0; c < j.cells(); ++c) tv.add(std::fabs(j.table()[c] - limit.table()[c]));
    const double t = 0.5 * tv.value();
    rep.values.push_back(value);
    rep.tv_to_limit.push_back(t);
    // Marginal distances never exceed the joint distance.
    rep.upper_bounds.push_back(value + entropy_modulus(t, nx) + entropy_modulus(t, ny) +
                               entropy_modulus(t, nx * ny));
  }
  const auto tail = static_cast<std::ptrdiff_t>((rep.values.size() + 1) / 2);
  rep.tail_min = *std::min_element(rep.values.end() - tail, rep.values.end());
  rep.tail_bound = *std::min_element(rep.upper_bounds.end() - tail, rep.upper_bounds.end());
  rep.holds = rep.limit_value <= rep.tail_bound + kSemicontinuitySlack;
  return rep;
}

DiscreteJoint xor_example() {
  const std::vector<std::string> pm{"-1", "1"};
  std::vector<double> t(8, 0.0);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) t[a * 4 + b * 2 + (a == b ? 1 : 0)] = 0.25;
  }
  return DiscreteJoint({{"X", pm}, {"Y", pm}, {"Z", pm}}, std::move(t));
}

DiscreteJoint markov_example() {
  std::vector<double> t(2 * 3 * 4, 0.0);
  for (int y1 : {-1, 1}) {
    for (int y2 : {-1, 1}) {
      for (int y3 : {-1, 1}) {
        const int x1 = y1;
        const int x2 = y1 + y2;
        const int x3 = x2 + y3;
        const auto i1 = static_cast<std::size_t>((x1 + 1) / 2);
        const auto i2 = static_cast<std::size_t>((x2 + 2) / 2);
        const auto i3 = static_cast<std::size_t>((x3 + 3) / 2);
        t[(i1 * 3 + i2) * 4 + i3] += 0.125;
      }
    }
  }
  return DiscreteJoint({{"X1", {"-1", "1"}}, {"X2", {"-2", "0", "2"}}, {"X3", {"-3", "-1", "1", "3"}}}, std::move(t));
}

DiscreteJoint random_joint(const std::vector<std::size_t>& sizes, double alpha, const SeededSampler& sampler,
                           std::uint64_t index) {
  static const std::vector<std::string> names{"X", "Y", "Z", "W"};
  if (sizes.empty() || sizes.size() > names.size()) throw Error(ErrorKind::InvalidArgument, "random joint: 1 to 4 variables");
  CounterRng seed_source(sampler, index);
  std::mt19937_64 gen(seed_source.next_u64());
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const std::size_t cells = product(sizes, 0, sizes.size());
  std::vector<double> t(cells);
  CompensatedSum total;
  for (double& p : t) {
    p = gamma(gen);
    total.add(p);
  }
  for (double& p : t) p /= total.value();
  // Fold the residual rounding into the largest cell.
  CompensatedSum check;
  for (double p : t) check.add(p);
  *std::max_element(t.begin(), t.end()) -= check.value() - 1.0;
  return make_joint(std::vector<std::string>(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(sizes.size())),
                    sizes, std::move(t));
}

DiscreteJoint mix_with_uniform(const DiscreteJoint& j, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error(ErrorKind::InvalidArgument, "mix: eps must lie in [0, 1]");
  std::vector<double> t = j.table();
  const double u = 1.0 / static_cast<double>(t.size());
  for (double& p : t) p = (1.0 - eps) * p + eps * u;
  CompensatedSum check;
  for (double p : t) check.add(p);
  *std::max_element(t.begin(), t.end()) -= check.value() - 1.0;
  return DiscreteJoint(j.variables(), std::move(t));
}

DiscreteJoint action_image_joint(const std::vector<double>& probabilities,
                                 const std::vector<std::vector<double>>& images, int k) {
  if (probabilities.size() != images.size() || images.empty() || images.size() > kMaxAlphabet) {
    throw Error(ErrorKind::InvalidArgument, "action joint: one image sample per atom, at most 64 atoms");
  }
  if (k < 0 || (std::size_t{1} << k) > kMaxAlphabet) throw Error(ErrorKind::InvalidArgument, "action joint: 0 <= k <= 6");
  const std::size_t bins = std::size_t{1} << k;
  Variable a{"A", {}};
  Variable f{"AF", {}};
  for (std::size_t s = 0; s < images.size(); ++s) a.alphabet.push_back(std::to_string(s));
  for (std::size_t b = 0; b < bins; ++b) f.alphabet.push_back(std::to_string(b));
  std::vector<double> t(images.size() * bins, 0.0);
  for (std::size_t s = 0; s < images.size(); ++s) {
    if (images[s].empty()) throw Error(ErrorKind::InvalidArgument, "action joint: empty image sample");
    const double w = probabilities[s] / static_cast<double>(images[s].size());
    for (double theta : images[s]) {
      const double u = wrap_angle(theta) / kPi * static_cast<double>(bins);
      const auto b = std::min(bins - 1, static_cast<std::size_t>(u));
      t[s * bins + b] += w;
    }
  }
  CompensatedSum check;
  for (double p : t) check.add(p);
  for (double& p : t) p /= check.value();
  return DiscreteJoint({a, f}, std::move(t));
}

DiscreteJoint read_joint_csv(const std::string& path) {
  const CsvTable csv = read_csv(path);
  if (csv.header.size() < 2 || csv.header.back() != "p") {
    throw Error(ErrorKind::Io, "'" + path + "': expected variable columns followed by a 'p' column");
  }
  const std::size_t m = csv.header.size() - 1;
  std::vector<Variable> vars;
  std::vector<std::map<std::string, std::size_t>> lookup(m);
  for (std::size_t k = 0; k < m; ++k) vars.push_back({csv.header[k], {}});
  for (const auto& row : csv.rows) {
    for (std::size_t k = 0; k < m; ++k) {
      if (lookup[k].emplace(row[k], vars[k].alphabet.size()).second) vars[k].alphabet.push_back(row[k]);
    }
  }
  std::size_t cells = 1;
  for (const auto& v : vars) {
    if (v.alphabet.size() > kMaxAlphabet || m > static_cast<std::size_t>(kMaxJointVariables)) {
      throw Error(ErrorKind::Io, "'" + path + "': at most 4 variables of 64 symbols");
    }
    cells *= v.alphabet.size();
  }
  std::vector<double> t(cells, 0.0);
  std::vector<bool> seen(cells, false);
  for (const auto& row : csv.rows) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < m; ++k) idx = idx * vars[k].alphabet.size() + lookup[k].at(row[k]);
    if (seen[idx]) throw Error(ErrorKind::Io, "'" + path + "': duplicate cell");
    seen[idx] = true;
    try {
      t[idx] = std::stod(row[m]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Io, "'" + path + "': non-numeric probability '" + row[m] + "'");
    }
  }
  return DiscreteJoint(std::move(vars), std::move(t));
}

void write_joint_csv(const DiscreteJoint& j, const std::string& path) {
  std::vector<std::string> cols;
  for (const auto& v : j.variables()) cols.push_back(v.name);
  cols.emplace_back("p");
  CsvWriter csv(path, "joint", 1, cols);
  const std::vector<std::size_t> sizes = sizes_of(j.variables());
  std::vector<std::size_t> digit(sizes.size(), 0);
  for (double p : j.table()) {
    for (std::size_t k = 0; k < sizes.size(); ++k) csv.cell(j.variables()[k].alphabet[digit[k]]);
    csv.cell(p);
    csv.end_row();
    for (std::size_t k = sizes.size(); k-- > 0;) {
      if (++digit[k] < sizes[k]) break;
      digit[k] = 0;
    }
  }
  csv.close();
}

}  // namespace fibdim
