#include "sip/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace sip {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double entropy(const Eigen::VectorXd& p) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    }
    return h;
}

EntropyProcess entropy_process(const ResponseProcess& process, const PredictorParams& params) {
    EntropyProcess ep;
    ep.id = process.id;
    const ForwardResult fwd = forward(process.actions, params);
    ep.values.reserve(fwd.probs.size());
    for (const auto& p : fwd.probs) ep.values.push_back(entropy(p));
    return ep;
}

std::vector<int> local_maxima(const std::vector<double>& h) {
    if (h.empty()) throw std::invalid_argument("local_maxima: empty entropy process");
    const int n = static_cast<int>(h.size());
    std::vector<int> maxima;
    int run_start = 0;
    for (int i = 0; i < n; ++i) {
        if (i + 1 < n && h[i + 1] == h[i]) continue;  // still inside the run
        const bool left_ok = run_start == 0 || h[run_start - 1] < h[run_start];
        const bool right_ok = i == n - 1 || h[i + 1] < h[i];
        if (left_ok && right_ok) maxima.push_back(run_start + 1);  // 1-based
        run_start = i + 1;
    }
    return maxima;
}

bool is_u_curve(const std::vector<double>& h, int i, int j, double lambda) {
    const int n = static_cast<int>(h.size());
    if (i < 1 || j > n || i >= j)
        throw std::out_of_range("is_u_curve: need 1 <= i < j <= " + std::to_string(n));
    const auto [lo_it, hi_it] = std::minmax_element(h.begin(), h.end());
    const double range = *hi_it - *lo_it;
    double interior = kInf;
    for (int t = i; t <= j; ++t) interior = std::min(interior, h[t - 1]);
    return std::min(h[i - 1], h[j - 1]) - interior >= lambda * range;
}

SegmentationResult segment(const std::vector<double>& h, double lambda) {
    if (h.empty()) throw std::invalid_argument("segment: empty entropy process");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("segment: lambda must lie in [0, 1]");

    const int n = static_cast<int>(h.size());
    const int total = n + 1;  // T
    const auto [lo_it, hi_it] = std::minmax_element(h.begin(), h.end());
    const double threshold = lambda * (*hi_it - *lo_it);
    const std::vector<int> maxima = local_maxima(h);
    std::set<int> cuts;

    // Left-to-right: current left endpoint starts at the virtual index 0.
    {
        int left = 0;  // 0 means the virtual end
        std::size_t pos = 0;
        while (pos < maxima.size()) {
            bool found = false;
            std::size_t found_pos = 0;
            double interior = kInf;
            int cursor = std::max(left, 1);
            for (std::size_t p = pos; p < maxima.size(); ++p) {
                const int d = maxima[p];
                for (; cursor <= d; ++cursor) interior = std::min(interior, h[cursor - 1]);
                const bool from_end = left == 0;
                const double ends = from_end ? h[d - 1] : std::min(h[left - 1], h[d - 1]);
                const double depth = ends - interior;
                if (from_end ? depth > threshold : depth >= threshold) {
                    found = true;
                    found_pos = p;
                    break;
                }
            }
            if (!found) break;
            cuts.insert(maxima[found_pos]);
            left = maxima[found_pos];
            pos = found_pos + 1;
        }
    }

    // Right-to-left: current right endpoint starts at the virtual index T.
    {
        int right = total;  // T means the virtual end
        auto pos = static_cast<std::ptrdiff_t>(maxima.size()) - 1;
        while (pos >= 0) {
            bool found = false;
            std::ptrdiff_t found_pos = 0;
            double interior = kInf;
            int cursor = std::min(right, n);
            for (std::ptrdiff_t p = pos; p >= 0; --p) {
                const int d = maxima[static_cast<std::size_t>(p)];
                for (; cursor >= d; --cursor) interior = std::min(interior, h[cursor - 1]);
                const bool from_end = right == total;
                const double ends = from_end ? h[d - 1] : std::min(h[right - 1], h[d - 1]);
                const double depth = ends - interior;
                if (from_end ? depth > threshold : depth >= threshold) {
                    found = true;
                    found_pos = p;
                    break;
                }
            }
            if (!found) break;
            cuts.insert(maxima[static_cast<std::size_t>(found_pos)]);
            right = maxima[static_cast<std::size_t>(found_pos)];
            pos = found_pos - 1;
        }
    }

    SegmentationResult result;
    result.lambda = lambda;
    result.boundaries.push_back(0);
    for (int c : cuts) result.boundaries.push_back(c);
    result.boundaries.push_back(total);
    return result;
}

void write_segments_file(const std::string& path, const std::vector<SegmentedProcess>& segments) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write segments file: " + path);
    for (const auto& s : segments) {
        nlohmann::json j;
        j["id"] = s.id;
        j["lambda"] = s.lambda;
        j["boundaries"] = s.boundaries;
        j["entropy"] = s.entropy;
        out << j.dump() << '\n';
    }
}

std::vector<SegmentedProcess> read_segments_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open segments file: " + path);
    std::vector<SegmentedProcess> segments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        SegmentedProcess s;
        s.id = j.at("id").get<std::string>();
        s.lambda = j.at("lambda").get<double>();
        s.boundaries = j.at("boundaries").get<std::vector<int>>();
        s.entropy = j.at("entropy").get<std::vector<double>>();
        segments.push_back(std::move(s));
    }
    return segments;
}

}  // namespace sip
