#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "stdlab/bank.hpp"
#include "stdlab/common.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/models.hpp"
#include "stdlab/rng.hpp"

namespace stdlab {

// full-precision decimal text (17 significant digits, round-trips f64 exactly)
std::string format_double(double x);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void header(const std::vector<std::string>& cols);
    void begin_row();
    void field(double x);
    void field(int64_t x);
    void field(const std::string& s);
    void end_row();

private:
    std::ofstream out_;
    bool first_in_row_ = true;
    void sep();
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

// Labeled point cloud; the on-disk schema is: label, x_1..x_d.
struct Dataset {
    std::vector<int> labels;
    std::vector<Vec> points;

    size_t size() const { return points.size(); }
    int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
};

void gen_data(const GmmSpec& spec, size_t n, uint64_t seed, const std::string& out_path);
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& ds, const std::string& path);

// schema: timestep, x_1..x_d
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// debugging dump, schema: slot, t, cond, x_1..x_d
void write_bank_csv(const TrajectoryBank& bank, const std::string& path);

// schema: label, x_1..x_d; endpoints carry their generating component label
void write_points_csv(const std::vector<int>& labels, const std::vector<Vec>& points,
                      const std::string& path);

}  // namespace stdlab
