// Shows why the randomization in the p-values should be integrated out:
// for one dataset the Shapiro-Wilk verdict varies with the uniforms drawn,
// so the replicated procedure reports the whole distribution of p-values.

#include <cmath>
#include <iostream>
#include <vector>

#include "residuum/residuum.hpp"

using namespace residuum;

int main() {
  const int n = 250;
  Stream cov = Stream::derive(99, {0});
  Stream resp = Stream::derive(99, {1});

  Eigen::MatrixXd X(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 3.0 * cov.uniform();
    X(i, 0) = 1.0;
    X(i, 1) = x;
    y[i] = ZeroInflatedPoisson(std::exp(1.0 + 2.0 * x), 0.3).sample(resp);
  }

  const Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(n, 1);
  const FitResult fit = fit_zip(X, Z, y);
  std::cout << "zip fit: beta = [" << fit.beta.transpose()
            << "], zero mass = " << 1.0 / (1.0 + std::exp(-fit.gamma(0))) << "\n\n";

  const auto laws = zip_laws(X, Z, fit.beta, fit.gamma);
  const ReplicatedSwResult rep = replicated_shapiro(laws, y, 1000, derive_seed(99, {2}));

  std::cout << "replicated shapiro-wilk over 1000 redraws of the randomization:\n";
  std::cout << "  fraction of p-values above 0.05: " << rep.fraction_above(0.05) << "\n";
  std::cout << "  median p-value: " << rep.median() << "\n";
  return 0;
}
