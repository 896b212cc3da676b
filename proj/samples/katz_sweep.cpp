// One suitable vector, many attenuation factors: Katz scores of a small web
// graph for alpha approaching 1/sigma, each with its certified error.

#include "csor/csor.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

int main(int argc, char** argv) {
    const char* path = argc > 1 ? argv[1] : "samples/data/tiny_web.txt";
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open " << path << '\n';
        return 1;
    }
    const auto m = csor::load_edge_list(in);
    const auto mt = csor::transpose(m);

    const auto bracket = csor::spectral_radius_bracket(mt, 1000);
    const double sigma = 1.05 * bracket.upper;
    const auto suit = csor::compute_suitable(mt, sigma);
    if (!suit.ok()) {
        std::cerr << "no suitable vector: " << csor::to_string(suit.status) << '\n';
        return 3;
    }
    std::cout << "rho in [" << bracket.lower << ", " << bracket.upper << "], sigma = " << sigma << ", "
              << suit.iterations << " products\n";

    const csor::DenseVector v(m.size(), 1.0);
    for (double frac : {0.5, 0.9, 0.99}) {
        const double alpha = frac / sigma;
        const auto k = csor::katz_transposed(mt, alpha, v, suit);
        std::cout << std::setprecision(6) << "alpha " << alpha << "  iterations " << k.cert.iterations
                  << "  bound " << k.cert.supnorm_bound << "\n ";
        for (double x : k.scores)
            std::cout << ' ' << x;
        std::cout << '\n';
    }
}
