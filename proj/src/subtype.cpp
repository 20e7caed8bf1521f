#include "tseg/subtype.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tseg {
namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Pinned uniform in [0,1): 53 random bits from a mt19937_64 stream.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void FeatureMatrix::validate() const {
    if (case_ids.size() != rows.size())
        throw std::invalid_argument("feature matrix: case id count mismatch");
    for (const auto& r : rows) {
        if (r.size() != feature_names.size())
            throw std::invalid_argument("feature matrix: row width mismatch");
        for (double v : r)
            if (!std::isfinite(v)) throw std::invalid_argument("feature matrix: non-finite value");
    }
}

void write_feature_csv(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "case_id";
    for (const auto& n : m.feature_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        out << m.case_ids[i];
        for (double v : m.rows[i]) out << ',' << fmt17(v);
        out << '\n';
    }
}

FeatureMatrix read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    FeatureMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty feature CSV");
    std::stringstream hs(line);
    std::string tok;
    bool first = true;
    while (std::getline(hs, tok, ',')) {
        if (first)
            first = false;
        else
            m.feature_names.push_back(tok);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        std::string id;
        std::getline(ls, id, ',');
        while (std::getline(ls, tok, ',')) row.push_back(std::stod(tok));
        m.case_ids.push_back(id);
        m.rows.push_back(std::move(row));
    }
    m.validate();
    return m;
}

Standardization standardize_fit(const FeatureMatrix& X) {
    X.validate();
    const std::size_t n = X.n(), d = X.d();
    if (n < 2) throw std::invalid_argument("standardize_fit: need at least 2 rows");
    Standardization s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    for (const auto& r : X.rows)
        for (std::size_t j = 0; j < d; ++j) s.means[j] += r[j];
    for (double& m : s.means) m /= n;
    for (const auto& r : X.rows)
        for (std::size_t j = 0; j < d; ++j) {
            double diff = r[j] - s.means[j];
            s.stds[j] += diff * diff;
        }
    for (double& v : s.stds) {
        v = std::sqrt(v / n);
        if (v < 1e-12) v = 1.0;  // constant-feature guard
    }
    return s;
}

std::vector<std::vector<double>> standardize_apply(const FeatureMatrix& X,
                                                   const Standardization& s) {
    std::vector<std::vector<double>> out(X.n(), std::vector<double>(X.d()));
    for (std::size_t i = 0; i < X.n(); ++i)
        for (std::size_t j = 0; j < X.d(); ++j)
            out[i][j] = (X.rows[i][j] - s.means[j]) / s.stds[j];
    return out;
}

PcaBasis pca_fit(const std::vector<std::vector<double>>& X, double variance_threshold) {
    if (X.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    const std::size_t n = X.size(), d = X[0].size();
    Eigen::MatrixXd M(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) M(i, j) = X[i][j];
    Eigen::RowVectorXd mean = M.colwise().mean();
    M.rowwise() -= mean;
    Eigen::MatrixXd cov = (M.transpose() * M) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd evals = es.eigenvalues();
    Eigen::MatrixXd evecs = es.eigenvectors();
    double total = evals.sum();
    if (!(total > 0)) throw std::invalid_argument("pca_fit: degenerate (zero-variance) matrix");

    PcaBasis basis;
    basis.rows.reserve(d);
    basis.explained_variance_ratio.reserve(d);
    for (std::int64_t idx = static_cast<std::int64_t>(d) - 1; idx >= 0; --idx) {
        Eigen::VectorXd v = evecs.col(idx);
        std::size_t imax = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(v[j]) > std::abs(v[imax])) imax = j;
        if (v[imax] < 0) v = -v;
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) row[j] = v[j];
        basis.rows.push_back(std::move(row));
        basis.explained_variance_ratio.push_back(std::max(0.0, evals[idx]) / total);
    }
    double cum = 0;
    basis.retained = basis.rows.size();
    for (std::size_t i = 0; i < basis.explained_variance_ratio.size(); ++i) {
        cum += basis.explained_variance_ratio[i];
        if (cum >= variance_threshold - 1e-12) {
            basis.retained = i + 1;
            break;
        }
    }
    return basis;
}

std::vector<std::vector<double>> pca_project(const std::vector<std::vector<double>>& X,
                                             const PcaBasis& basis) {
    std::vector<std::vector<double>> out(X.size(), std::vector<double>(basis.retained, 0.0));
    for (std::size_t i = 0; i < X.size(); ++i)
        for (std::size_t c = 0; c < basis.retained; ++c) {
            double s = 0;
            for (std::size_t j = 0; j < X[i].size(); ++j) s += basis.rows[c][j] * X[i][j];
            out[i][c] = s;
        }
    return out;
}

KMeansResult kmeans_fit(const std::vector<std::vector<double>>& Z, int k, std::uint64_t seed,
                        int max_iter, double tol) {
    const std::size_t n = Z.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("kmeans_fit: k outside [1, n]");
    const std::size_t m = Z[0].size();
    std::mt19937_64 rng(seed);

    // k-means++ seeding
    std::vector<std::vector<double>> centroids;
    centroids.push_back(Z[static_cast<std::size_t>(uniform01(rng) * n)]);
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sqdist(Z[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0) {
            pick = static_cast<std::size_t>(uniform01(rng) * n);
        } else {
            double r = uniform01(rng) * total;
            double acc = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(Z[pick]);
    }

    KMeansResult res;
    res.assignments.assign(n, 0);
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        double obj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sqdist(Z[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = sqdist(Z[i], centroids[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            res.assignments[i] = best;
            obj += bd;
        }
        if (obj > prev_obj + 1e-9)
            throw std::logic_error("kmeans_fit: objective increased");
        prev_obj = obj;

        std::vector<std::vector<double>> next(k, std::vector<double>(m, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = next[res.assignments[i]];
            for (std::size_t j = 0; j < m; ++j) c[j] += Z[i][j];
            ++counts[res.assignments[i]];
        }
        double shift = 0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                next[c] = centroids[c];  // empty cluster keeps its centroid
                continue;
            }
            for (std::size_t j = 0; j < m; ++j) next[c][j] /= counts[c];
            shift = std::max(shift, std::sqrt(sqdist(next[c], centroids[c])));
        }
        centroids = std::move(next);
        if (shift < tol) break;
    }

    // Final assignment against the final centroids.
    double obj = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double bd = sqdist(Z[i], centroids[0]);
        for (int c = 1; c < k; ++c) {
            double d = sqdist(Z[i], centroids[c]);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        res.assignments[i] = best;
        obj += bd;
    }
    res.centroids = std::move(centroids);
    res.objective = obj;
    return res;
}

double silhouette_mean(const std::vector<std::vector<double>>& Z,
                       const std::vector<int>& assignments) {
    const std::size_t n = Z.size();
    if (assignments.size() != n) throw std::invalid_argument("silhouette: size mismatch");
    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    std::vector<std::size_t> counts(k, 0);
    for (int a : assignments) ++counts[a];
    int nonempty = 0;
    for (auto c : counts) nonempty += c > 0;
    if (nonempty < 2) throw std::invalid_argument("silhouette: needs at least 2 clusters");

    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignments[i]] == 1) continue;  // singleton scores 0
        std::vector<double> sums(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[assignments[j]] += std::sqrt(sqdist(Z[i], Z[j]));
        }
        double a = sums[assignments[i]] / (counts[assignments[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == assignments[i] || counts[c] == 0) continue;
            b = std::min(b, sums[c] / counts[c]);
        }
        total += (b - a) / std::max(a, b);
    }
    return total / n;
}

int select_k(const std::vector<std::vector<double>>& Z, int k_min, int k_max, std::uint64_t seed) {
    if (k_min > k_max) throw std::invalid_argument("select_k: empty range");
    if (k_min < 2 || static_cast<std::size_t>(k_max) > Z.size() - 1)
        throw std::invalid_argument("select_k: range outside [2, n-1]");
    int best_k = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        KMeansResult r = kmeans_fit(Z, k, seed);
        double score;
        try {
            score = silhouette_mean(Z, r.assignments);
        } catch (const std::invalid_argument&) {
            score = -2.0;  // collapsed to a single effective cluster
        }
        if (score > best_score) {
            best_score = score;
            best_k = k;
        }
    }
    return best_k;
}

SubtypeModel fit_subtype_model(const FeatureMatrix& X, const SubtypeFitConfig& cfg) {
    SubtypeModel model;
    model.feature_names = X.feature_names;
    model.seed = cfg.seed;
    model.variance_threshold = cfg.variance_threshold;
    model.standardization = standardize_fit(X);
    auto Xs = standardize_apply(X, model.standardization);
    model.pca = pca_fit(Xs, cfg.variance_threshold);
    auto Z = pca_project(Xs, model.pca);
    model.k = select_k(Z, cfg.k_min, cfg.k_max, cfg.seed);
    model.centroids = kmeans_fit(Z, model.k, cfg.seed).centroids;
    return model;
}

int assign_subtype(const SubtypeModel& model, const FeatureVector& fv) {
    if (fv.size() != model.feature_names.size())
        throw std::invalid_argument("assign_subtype: feature schema mismatch (arity)");
    FeatureMatrix X;
    X.feature_names = model.feature_names;
    X.case_ids = {"query"};
    std::vector<double> row(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i) {
        if (fv[i].first != model.feature_names[i])
            throw std::invalid_argument("assign_subtype: feature schema mismatch at " +
                                        fv[i].first);
        row[i] = fv[i].second;
    }
    X.rows = {std::move(row)};
    auto Z = pca_project(standardize_apply(X, model.standardization), model.pca);
    int best = 0;
    double bd = sqdist(Z[0], model.centroids[0]);
    for (std::size_t c = 1; c < model.centroids.size(); ++c) {
        double d = sqdist(Z[0], model.centroids[c]);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

void save_model(const SubtypeModel& model, const std::string& path) {
    nlohmann::json j;
    j["schema"] = "tumorseg.subtype-model";
    j["version"] = model.version;
    j["feature_names"] = model.feature_names;
    j["means"] = model.standardization.means;
    j["stds"] = model.standardization.stds;
    j["pca_rows"] = model.pca.rows;
    j["explained_variance_ratio"] = model.pca.explained_variance_ratio;
    j["retained"] = model.pca.retained;
    j["centroids"] = model.centroids;
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["variance_threshold"] = model.variance_threshold;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

SubtypeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": corrupt model file: " + e.what());
    }
    if (j.value("schema", "") != "tumorseg.subtype-model")
        throw std::runtime_error(path + ": not a subtype model file");
    if (j.value("version", -1) != 1)
        throw std::runtime_error(path + ": unsupported model version");
    SubtypeModel m;
    try {
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.standardization.means = j.at("means").get<std::vector<double>>();
        m.standardization.stds = j.at("stds").get<std::vector<double>>();
        m.pca.rows = j.at("pca_rows").get<std::vector<std::vector<double>>>();
        m.pca.explained_variance_ratio =
            j.at("explained_variance_ratio").get<std::vector<double>>();
        m.pca.retained = j.at("retained").get<std::size_t>();
        m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
        m.k = j.at("k").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.variance_threshold = j.at("variance_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": corrupt model file: " + e.what());
    }
    return m;
}

}  // namespace tseg
