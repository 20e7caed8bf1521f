#include "tseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tseg {

const std::set<int>& RegionSpec::region_labels(const std::string& name) const {
    for (const auto& [rname, labels] : regions)
        if (rname == name) return labels;
    throw std::invalid_argument("unknown region: " + name);
}

bool RegionSpec::has_region(const std::string& name) const {
    return std::any_of(regions.begin(), regions.end(),
                       [&](const auto& r) { return r.first == name; });
}

Mask region_mask(const LabelVolume& labels, const RegionSpec& spec, const std::string& region) {
    const std::set<int>& ids = spec.region_labels(region);
    Mask m(labels.geom);
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        m.data[i] = ids.count(labels.data[i]) ? 1 : 0;
    return m;
}

double dice(const Mask& a, const Mask& b) {
    if (!same_dims(a.geom, b.geom)) throw std::invalid_argument("dice: geometry mismatch");
    std::size_t na = 0, nb = 0, inter = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        bool fa = a.data[i], fb = b.data[i];
        na += fa;
        nb += fb;
        inter += fa && fb;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

Mask boundary_mask(const Mask& m) {
    const Geometry& g = m.geom;
    Mask out(g);
    const auto& offs = neighborhood_offsets(Connectivity::Faces6);
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x) {
                std::size_t i = g.linear(x, y, z);
                if (!m.data[i]) continue;
                bool edge = false;
                for (const auto& o : offs) {
                    std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (!g.in_bounds(nx, ny, nz) || !m.data[g.linear(nx, ny, nz)]) {
                        edge = true;
                        break;
                    }
                }
                out.data[i] = edge;
            }
    return out;
}

namespace {

std::vector<Vec3> boundary_points(const Mask& m) {
    Mask b = boundary_mask(m);
    const Geometry& g = m.geom;
    std::vector<Vec3> pts;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x)
                if (b.data[g.linear(x, y, z)])
                    pts.push_back({x * g.spacing[0], y * g.spacing[1], z * g.spacing[2]});
    return pts;
}

void directed_min_distances(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                            std::vector<double>& out, bool parallel) {
    const std::size_t off = out.size();
    out.resize(off + from.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(from.size()); ++i) {
        double best = std::numeric_limits<double>::infinity();
        const Vec3& p = from[i];
        for (const Vec3& q : to) {
            double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        out[off + i] = std::sqrt(best);
    }
}

std::vector<double> surface_distances_impl(const Mask& a, const Mask& b, bool parallel) {
    if (!same_dims(a.geom, b.geom))
        throw std::invalid_argument("surface_distances: geometry mismatch");
    std::vector<Vec3> pa = boundary_points(a);
    std::vector<Vec3> pb = boundary_points(b);
    std::vector<double> d;
    if (pa.empty() || pb.empty()) return d;
    directed_min_distances(pa, pb, d, parallel);
    directed_min_distances(pb, pa, d, parallel);
    return d;
}

}  // namespace

std::vector<double> detail::surface_distances(const Mask& a, const Mask& b) {
    return surface_distances_impl(a, b, true);
}

std::vector<double> detail::surface_distances_serial(const Mask& a, const Mask& b) {
    return surface_distances_impl(a, b, false);
}

double detail::percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of empty set");
    std::sort(values.begin(), values.end());
    double pos = p / 100.0 * (values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double f = pos - lo;
    return values[lo] * (1.0 - f) + values[hi] * f;
}

double hd95(const Mask& a, const Mask& b, const MetricConfig& cfg) {
    bool ea = a.empty_mask(), eb = b.empty_mask();
    if (ea && eb) return 0.0;
    if (ea != eb) return cfg.hd_penalty_mm;
    return detail::percentile(detail::surface_distances(a, b), 95.0);
}

LesionwiseResult lesionwise(const Mask& pred, const Mask& gt, const MetricConfig& cfg) {
    if (!same_dims(pred.geom, gt.geom))
        throw std::invalid_argument("lesionwise: geometry mismatch");
    LesionwiseResult r;
    ComponentMap gcm = connected_components(gt, cfg.connectivity);
    ComponentMap pcm = connected_components(pred, cfg.connectivity);
    r.gt_lesions = gcm.component_count;

    if (gcm.component_count == 0 && pcm.component_count == 0) {
        r.lw_dice = 1.0;
        r.lw_hd95 = 0.0;
        return r;
    }

    // pred component -> matched to any lesion; lesion -> set of matched pred comps
    std::vector<bool> pred_matched(pcm.component_count + 1, false);
    std::vector<std::vector<std::int32_t>> lesion_preds(gcm.component_count + 1);
    for (std::int32_t lid = 1; lid <= gcm.component_count; ++lid) {
        Mask lesion = gcm.component_mask(lid);
        Mask dil = binary_dilate(lesion, cfg.dilation_radius, cfg.connectivity);
        std::vector<bool> hit(pcm.component_count + 1, false);
        for (std::size_t i = 0; i < dil.data.size(); ++i)
            if (dil.data[i] && pcm.labels[i]) hit[pcm.labels[i]] = true;
        for (std::int32_t pid = 1; pid <= pcm.component_count; ++pid)
            if (hit[pid]) {
                lesion_preds[lid].push_back(pid);
                pred_matched[pid] = true;
            }
    }
    for (std::int32_t pid = 1; pid <= pcm.component_count; ++pid)
        if (!pred_matched[pid]) ++r.false_positives;

    double dice_sum = 0.0, hd_sum = 0.0;
    for (std::int32_t lid = 1; lid <= gcm.component_count; ++lid) {
        if (lesion_preds[lid].empty()) {
            ++r.false_negatives;
            continue;
        }
        Mask lesion = gcm.component_mask(lid);
        Mask match(pred.geom);
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            std::int32_t pid = pcm.labels[i];
            if (pid &&
                std::binary_search(lesion_preds[lid].begin(), lesion_preds[lid].end(), pid))
                match.data[i] = 1;
        }
        dice_sum += dice(lesion, match);
        hd_sum += hd95(lesion, match, cfg);
    }

    const double denom = r.gt_lesions + r.false_positives;
    r.lw_dice = dice_sum / denom;
    r.lw_hd95 = (hd_sum + cfg.hd_penalty_mm * (r.false_positives + r.false_negatives)) / denom;
    return r;
}

CaseReport evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const RegionSpec& spec,
                         const MetricConfig& cfg) {
    if (!same_dims(pred.geom, gt.geom))
        throw std::invalid_argument("evaluate_case: geometry mismatch");
    CaseReport rep;
    for (const auto& [name, labels] : spec.regions) {
        (void)labels;
        Mask mp = region_mask(pred, spec, name);
        Mask mg = region_mask(gt, spec, name);
        LesionwiseResult lw = lesionwise(mp, mg, cfg);
        rep.regions[name] = {lw.lw_dice, lw.lw_hd95, dice(mp, mg), hd95(mp, mg, cfg)};
    }
    return rep;
}

namespace {

AggregateRow aggregate(std::vector<double> v) {
    AggregateRow row{};
    double sum = 0;
    for (double x : v) sum += x;
    row.mean = sum / v.size();
    double ss = 0;
    for (double x : v) ss += (x - row.mean) * (x - row.mean);
    row.stddev = std::sqrt(ss / v.size());
    row.q25 = detail::percentile(v, 25.0);
    row.median = detail::percentile(v, 50.0);
    row.q75 = detail::percentile(v, 75.0);
    return row;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

}  // namespace

DatasetReport evaluate_dataset(const std::vector<CaseReport>& cases) {
    if (cases.empty()) throw std::invalid_argument("evaluate_dataset: no cases");
    DatasetReport rep;
    rep.cases = cases;
    std::map<std::pair<std::string, std::string>, std::vector<double>> series;
    for (const auto& c : cases)
        for (const auto& [region, s] : c.regions) {
            series[{region, "lw_dice"}].push_back(s.lw_dice);
            series[{region, "lw_hd95"}].push_back(s.lw_hd95);
            series[{region, "dice"}].push_back(s.dice);
            series[{region, "hd95"}].push_back(s.hd95);
        }
    for (auto& [key, vals] : series) rep.aggregates[key] = aggregate(std::move(vals));
    return rep;
}

void write_case_report_csv(const DatasetReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "case_id,region,lw_dice,lw_hd95,dice,hd95\n";
    for (const auto& c : rep.cases)
        for (const auto& [region, s] : c.regions)
            out << c.case_id << ',' << region << ',' << fmt(s.lw_dice) << ',' << fmt(s.lw_hd95)
                << ',' << fmt(s.dice) << ',' << fmt(s.hd95) << '\n';
}

void write_aggregate_csv(const DatasetReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "region,metric,mean,std,q25,median,q75\n";
    for (const auto& [key, row] : rep.aggregates)
        out << key.first << ',' << key.second << ',' << fmt(row.mean) << ',' << fmt(row.stddev)
            << ',' << fmt(row.q25) << ',' << fmt(row.median) << ',' << fmt(row.q75) << '\n';
}

}  // namespace tseg
