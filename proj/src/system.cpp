#include "nsnh/system.hpp"

#include <algorithm>
#include <cmath>

#include "nsnh/linalg.hpp"

namespace nsnh {

bool GeometryReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const GeometryCheck* GeometryReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

GeometryCheck check_chart(const ChartSpec& chart) {
  GeometryCheck c{"chart", true, 0.0, ""};
  try {
    chart.validate();
  } catch (const SimError& e) {
    c.passed = false;
    c.detail = e.what();
  }
  return c;
}

GeometryCheck check_boundary_gradient(const BoundarySpec& bnd, const std::vector<Vec>& points,
                                      double tol) {
  GeometryCheck c{"boundary_gradient", true, 0.0, ""};
  double worst_scaled = 0.0;
  for (const auto& q : points) {
    const Vec db = bnd.db(q);
    Vec fd(q.size());
    Vec x = q;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double h = 1e-6 * (1.0 + std::abs(q(i)));
      x(i) = q(i) + h;
      const double bp = bnd.b(x);
      x(i) = q(i) - h;
      const double bm = bnd.b(x);
      x(i) = q(i);
      fd(i) = (bp - bm) / (2.0 * h);
      worst_scaled = std::max(worst_scaled, std::abs(fd(i) - db(i)) / (1.0 + std::abs(db(i))));
    }
    const double denom = std::max({fd.norm(), db.norm(), 1e-300});
    c.worst = std::max(c.worst, (fd - db).norm() / denom);
  }
  c.passed = worst_scaled <= tol;
  if (!c.passed) c.detail = "max scaled component error " + std::to_string(worst_scaled);
  return c;
}

}  // namespace

GeometryReport validate_geometry(const SystemSpec& sys, const std::vector<Vec>& sample_points) {
  GeometryReport rep;
  rep.checks.push_back(check_chart(sys.chart));

  if (sys.boundary) {
    rep.checks.push_back(
        check_boundary_gradient(*sys.boundary, sample_points, sys.tol.fd_derivative));
  }

  GeometryCheck rank{"distribution_rank", true, 0.0, ""};
  GeometryCheck annih{"distribution_annihilation", true, 0.0, ""};
  GeometryCheck dmu{"distribution_derivative", true, 0.0, ""};
  for (const auto& q : sample_points) {
    Mat mu;
    try {
      mu = sys.distribution.rows(q);
    } catch (const SimError& e) {
      rank.passed = false;
      rank.detail = e.what();
      continue;
    }
    try {
      const Mat basis = distribution_basis(sys.distribution, q, sys.tol.rank);
      if (mu.rows() > 0) {
        annih.worst = std::max(annih.worst, (mu * basis).cwiseAbs().maxCoeff());
      }
    } catch (const SimError& e) {
      rank.passed = false;
      rank.detail = e.what();
    }
    if (sys.distribution.dmu && sys.distribution.m > 0) {
      const Tensor3 given = sys.distribution.dmu(q);
      DistributionSpec fd_only = sys.distribution;
      fd_only.dmu = nullptr;
      const Tensor3 fd = fd_only.derivative(q);
      for (int a = 0; a < sys.distribution.m; ++a) {
        const double e = ((fd[a] - given[a]).cwiseAbs().array() /
                          (1.0 + given[a].cwiseAbs().array()))
                             .maxCoeff();
        dmu.worst = std::max(dmu.worst, e);
      }
    }
  }
  annih.passed = annih.worst <= 1e-12;
  dmu.passed = dmu.worst <= sys.tol.fd_derivative;
  rep.checks.push_back(rank);
  rep.checks.push_back(annih);
  rep.checks.push_back(dmu);
  return rep;
}

}  // namespace nsnh
