#pragma once

#include <span>
#include <vector>

namespace mgu::stats {

double mean(std::span<const double> xs);
double median(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stdev(std::span<const double> xs);
/// Adjusted Fisher-Pearson sample skewness; 0 when the variance vanishes.
double skewness(std::span<const double> xs);
/// Ranks starting at 1, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> xs);
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);
/// Mann-Whitney AUC: P(pos > neg) + 0.5 P(pos == neg).
double auc(std::span<const double> positives, std::span<const double> negatives);

}  // namespace mgu::stats
