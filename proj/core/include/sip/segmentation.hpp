#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sip/predictor.hpp"

namespace sip {

// Shannon entropy in nats, with 0*log(0) taken as 0.
double entropy(const Eigen::VectorXd& p);

// Per-step predictive entropy of a process: h[t] is the entropy of the
// distribution predicting action t+1 (0-based), length T-1.
struct EntropyProcess {
    std::string id;
    std::vector<double> values;
};

EntropyProcess entropy_process(const ResponseProcess& process, const PredictorParams& params);

// Local maxima of h, 1-based indices matching h_1..h_{T-1}. A maximal run of
// equal values that strictly dominates both existing flanks counts once, at
// its leftmost index. First/last runs only need to dominate their single
// existing flank.
std::vector<int> local_maxima(const std::vector<double>& h);

// U-curve test for real endpoints 1 <= i < j <= T-1:
//   min(h_i, h_j) - min_{i<=t<=j} h_t >= lambda * (max h - min h)
// with the max/min on the right taken over all of h.
bool is_u_curve(const std::vector<double>& h, int i, int j, double lambda);

struct SegmentationResult {
    // Strictly increasing action-space boundaries 0 = t0 < ... < tL = T.
    // Segment l covers actions t_{l-1}+1 .. t_l (1-based), i.e. the entropy
    // index t cuts between actions t and t+1.
    std::vector<int> boundaries;
    double lambda = 0.0;

    int segment_count() const { return static_cast<int>(boundaries.size()) - 1; }
};

// Bidirectional greedy segmentation over the local-maxima set: a left-to-right
// pass collects right endpoints of U-curves starting from a virtual infinite
// value before h, a right-to-left pass collects left endpoints symmetrically,
// and the union of both passes gives the interior boundaries.
//
// A candidate anchored at a virtual end qualifies only with depth strictly
// greater than lambda * range; real-endpoint pairs use the >= test above.
// The strict test at the ends is what makes lambda = 1 with a unique global
// maximum yield exactly one segment.
SegmentationResult segment(const std::vector<double>& h, double lambda);

struct SegmentedProcess {
    std::string id;
    double lambda = 0.0;
    std::vector<int> boundaries;
    std::vector<double> entropy;
};

void write_segments_file(const std::string& path, const std::vector<SegmentedProcess>& segments);
std::vector<SegmentedProcess> read_segments_file(const std::string& path);

}  // namespace sip
