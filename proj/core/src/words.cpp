#include "furstenberg/words.hpp"

#include <cmath>
#include <map>

namespace furst {

EntropySequence exact_product_entropy(const MeasureSpec& spec, int n_max,
                                      std::size_t guard) {
    if (n_max < 1)
        throw std::invalid_argument("exact_product_entropy: n_max >= 1");

    EntropySequence out;
    const auto& atoms = spec.atoms();

    // level: canonical key -> (matrix, exact probability)
    std::map<std::string, std::pair<ExactMatrix, BigRational>> level;
    level.emplace(ExactMatrix().psl_key(),
                  std::make_pair(ExactMatrix(), BigRational(1)));

    for (int n = 1; n <= n_max; ++n) {
        if (level.size() * atoms.size() > guard)
            throw ExplosionGuard("exact_product_entropy: support would exceed " +
                                 std::to_string(guard) + " at n=" +
                                 std::to_string(n));
        std::map<std::string, std::pair<ExactMatrix, BigRational>> next;
        for (const auto& [key, mp] : level) {
            for (const auto& atom : atoms) {
                ExactMatrix prod = (mp.first * atom.matrix).psl_canonical();
                BigRational p = mp.second * atom.weight;
                auto [it, inserted] =
                    next.emplace(prod.psl_key(), std::make_pair(prod, p));
                if (!inserted) it->second.second += p;
            }
        }
        level = std::move(next);

        double h = 0.0;
        for (const auto& [key, mp] : level) {
            double p = mp.second.convert_to<double>();
            if (p > 0) h -= p * std::log(p);
        }
        out.h_over_n.push_back(h / static_cast<double>(n));
        out.support_sizes.push_back(level.size());
        double full = std::pow(static_cast<double>(atoms.size()),
                               static_cast<double>(n));
        out.all_distinct.push_back(
            static_cast<double>(level.size()) == full);
    }
    return out;
}

bool words_distinct_to_depth(const std::vector<ExactMatrix>& generators,
                             int depth, std::size_t guard) {
    std::map<std::string, ExactMatrix> seen;
    std::vector<ExactMatrix> level{ExactMatrix()};
    seen.emplace(ExactMatrix().psl_key(), ExactMatrix());
    std::size_t expected = 1;
    for (int n = 1; n <= depth; ++n) {
        expected *= generators.size();
        if (seen.size() + level.size() * generators.size() > guard)
            throw ExplosionGuard("words_distinct_to_depth: guard exceeded");
        std::vector<ExactMatrix> next;
        next.reserve(level.size() * generators.size());
        for (const auto& m : level) {
            for (const auto& g : generators) {
                ExactMatrix prod = (m * g).psl_canonical();
                auto [it, inserted] = seen.emplace(prod.psl_key(), prod);
                if (!inserted) return false; // collision across any lengths
                next.push_back(std::move(prod));
            }
        }
        level = std::move(next);
    }
    return true;
}

double PingPongCertificate::h_rw() const {
    if (!certified || plus_arcs.empty()) return 0.0;
    return std::log(static_cast<double>(plus_arcs.size()));
}

PingPongCertificate pingpong_certify(
    const std::vector<std::pair<double, double>>& elements, double epsilon) {
    PingPongCertificate out;
    out.epsilon = epsilon;
    if (!(epsilon > 0.0) || epsilon >= kPi / 8)
        throw std::invalid_argument("pingpong_certify: epsilon out of (0, pi/8)");
    if (elements.empty())
        throw std::invalid_argument("pingpong_certify: no elements");

    const double half = epsilon / 2.0;
    for (const auto& [theta, lambda] : elements) {
        if (!(lambda > 1.0))
            throw std::invalid_argument("pingpong_certify: lambda must be > 1");
        // g maps the complement of the repeller arc into an arc of radius
        // arctan(lambda^-2 cot(eps/2)) around the attractor.
        double delta = std::atan(std::pow(lambda, -2.0) / std::tan(half));
        out.deltas.push_back(delta);
        out.plus_arcs.push_back({wrap_angle(theta), delta});
        out.minus_arcs.push_back({wrap_angle(theta + kPi / 2), half});
    }

    const std::size_t n = elements.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (out.deltas[i] > half) {
            out.refusal = "attractor image arc exceeds epsilon/2 (element " +
                          std::to_string(i) + "); increase lambda";
            out.offending = {static_cast<int>(i), static_cast<int>(i)};
            return out;
        }
    }

    std::vector<PingPongArc> all;
    all.insert(all.end(), out.plus_arcs.begin(), out.plus_arcs.end());
    all.insert(all.end(), out.minus_arcs.begin(), out.minus_arcs.end());
    out.min_gap = kPi;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            double gap = circle_distance(all[i].center, all[j].center) -
                         all[i].radius - all[j].radius;
            if (gap < out.min_gap) out.min_gap = gap;
            if (gap <= 0.0) {
                out.refusal = "arcs " + std::to_string(i) + " and " +
                              std::to_string(j) + " overlap";
                out.offending = {static_cast<int>(i), static_cast<int>(j)};
                return out;
            }
        }
    }
    out.certified = true;
    return out;
}

} // namespace furst
