// Monte Carlo heat loss of the Sierpinski-gasket domain: Brownian and alpha = 1,
// with local log-log slopes. Usage: demo_gasket_mc [n_paths] [threads]

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "fshc/asymptotics.hpp"
#include "fshc/domain_io.hpp"
#include "fshc/mc2d.hpp"

int main(int argc, char** argv) {
  using namespace fshc;
  const IFSDomain dom = domain_from_json(nlohmann::json::parse(R"({
    "d": 2, "name": "gasket", "y_scale_squared": "3",
    "base": {"vertices": [["1/2","0"], ["3/4","1/4"], ["1/4","1/4"]]},
    "maps": [{"ratio":"1/2","translation":["0","0"]},
             {"ratio":"1/2","translation":["1/2","0"]},
             {"ratio":"1/2","translation":["1/4","1/4"]}]})"));
  PathConfig cfg;
  cfg.n_paths = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 100000;
  cfg.threads = argc > 2 ? static_cast<unsigned>(std::atoi(argv[2])) : 1;
  cfg.seed = 11;
  const auto grid = log_grid(1e-2, 1e-4, 9);

  const double kappa = d_minus_b(dom);
  std::printf("gasket: |G| = %.7f, d - b = %.7f, %zu paths\n", total_measure(dom).value(), kappa, cfg.n_paths);
  for (double alpha : {2.0, 1.0}) {
    const auto c = alpha == 2.0 ? estimate_q2_2d(dom, cfg, grid) : estimate_shc_2d(dom, alpha, cfg, grid);
    const auto loss = c.loss();
    std::printf("\nalpha = %.0f (expected slope %.4f)\n%10s %12s %10s %8s\n", alpha, kappa / alpha, "t", "loss", "stderr",
                "slope");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::printf("%10.2e %12.6f %10.2e", grid[i], loss[i], c.std_error[i]);
      if (i > 0) std::printf(" %8.4f", std::log(loss[i - 1] / loss[i]) / std::log(grid[i - 1] / grid[i]));
      std::printf("\n");
    }
  }
  return 0;
}
