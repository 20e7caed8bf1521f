#ifndef TSEG_SUBTYPE_HPP
#define TSEG_SUBTYPE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tseg/radiomics.hpp"

namespace tseg {

struct FeatureMatrix {
    std::vector<std::string> case_ids;       // n
    std::vector<std::string> feature_names;  // d
    std::vector<std::vector<double>> rows;   // n x d

    std::size_t n() const { return rows.size(); }
    std::size_t d() const { return feature_names.size(); }
    void validate() const;
};

void write_feature_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_feature_csv(const std::string& path);

struct Standardization {
    std::vector<double> means;
    std::vector<double> stds;  // columns with population std < 1e-12 get std 1
};

struct PcaBasis {
    std::vector<std::vector<double>> rows;  // m x d, orthonormal
    std::vector<double> explained_variance_ratio;  // all d ratios, non-increasing
    std::size_t retained = 0;               // m
};

struct SubtypeModel {
    int version = 1;
    std::vector<std::string> feature_names;
    Standardization standardization;
    PcaBasis pca;
    std::vector<std::vector<double>> centroids;  // k x m
    int k = 0;
    std::uint64_t seed = 0;
    double variance_threshold = 0.99;
};

Standardization standardize_fit(const FeatureMatrix& X);
std::vector<std::vector<double>> standardize_apply(const FeatureMatrix& X,
                                                   const Standardization& s);

/// Covariance eigendecomposition; retains the smallest m whose cumulative
/// explained-variance ratio reaches the threshold. Sign convention: each
/// basis row's largest-magnitude entry is positive.
PcaBasis pca_fit(const std::vector<std::vector<double>>& X_std, double variance_threshold);
std::vector<std::vector<double>> pca_project(const std::vector<std::vector<double>>& X_std,
                                             const PcaBasis& basis);

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignments;
    double objective = 0.0;  // within-cluster sum of squares
};

/// k-means++ seeding from a deterministic PRNG, then Lloyd iterations.
/// Identical (data, k, seed) gives bit-identical centroids.
KMeansResult kmeans_fit(const std::vector<std::vector<double>>& Z, int k, std::uint64_t seed,
                        int max_iter = 300, double tol = 1e-6);

double silhouette_mean(const std::vector<std::vector<double>>& Z,
                       const std::vector<int>& assignments);

/// Grid search over k, argmax of the mean silhouette; ties to the smallest k.
int select_k(const std::vector<std::vector<double>>& Z, int k_min, int k_max, std::uint64_t seed);

struct SubtypeFitConfig {
    int k_min = 2;
    int k_max = 8;
    std::uint64_t seed = 20240;
    double variance_threshold = 0.99;
};

SubtypeModel fit_subtype_model(const FeatureMatrix& X, const SubtypeFitConfig& cfg);
int assign_subtype(const SubtypeModel& model, const FeatureVector& fv);

void save_model(const SubtypeModel& model, const std::string& path);
SubtypeModel load_model(const std::string& path);

}  // namespace tseg

#endif
