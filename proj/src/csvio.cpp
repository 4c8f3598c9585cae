#include "stdlab/csvio.hpp"

#include <cstdio>
#include <sstream>

namespace stdlab {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
}

void CsvWriter::header(const std::vector<std::string>& cols) {
    begin_row();
    for (const auto& c : cols) field(c);
    end_row();
}

void CsvWriter::begin_row() { first_in_row_ = true; }

void CsvWriter::sep() {
    if (!first_in_row_) out_ << ',';
    first_in_row_ = false;
}

void CsvWriter::field(double x) {
    sep();
    out_ << format_double(x);
}

void CsvWriter::field(int64_t x) {
    sep();
    out_ << x;
}

void CsvWriter::field(const std::string& s) {
    sep();
    out_ << s;
}

void CsvWriter::end_row() { out_ << '\n'; }

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

void gen_data(const GmmSpec& spec, size_t n, uint64_t seed, const std::string& out_path) {
    spec.validate();
    Rng rng(seed);
    Dataset ds;
    ds.labels.reserve(n);
    ds.points.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        auto [x, cond] = gmm_sample(spec, Condition::null_cond(), rng);
        ds.labels.push_back(cond.label);
        ds.points.push_back(std::move(x));
    }
    if (n == 0) {
        // header-only file still needs a dimension for the column names
        CsvWriter w(out_path);
        std::vector<std::string> cols = {"label"};
        for (int j = 0; j < spec.dim(); ++j) cols.push_back("x_" + std::to_string(j + 1));
        w.header(cols);
        return;
    }
    write_dataset(ds, out_path);
}

void write_dataset(const Dataset& ds, const std::string& path) {
    CsvWriter w(path);
    std::vector<std::string> cols = {"label"};
    for (int j = 0; j < ds.dim(); ++j) cols.push_back("x_" + std::to_string(j + 1));
    w.header(cols);
    for (size_t i = 0; i < ds.size(); ++i) {
        w.begin_row();
        w.field(static_cast<int64_t>(ds.labels[i]));
        for (double x : ds.points[i]) w.field(x);
        w.end_row();
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    CsvWriter w(path);
    const int d = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].second.size());
    std::vector<std::string> cols = {"timestep"};
    for (int j = 0; j < d; ++j) cols.push_back("x_" + std::to_string(j + 1));
    w.header(cols);
    for (const auto& [t, x] : traj.states) {
        w.begin_row();
        w.field(static_cast<int64_t>(t));
        for (double v : x) w.field(v);
        w.end_row();
    }
}

void write_bank_csv(const TrajectoryBank& bank, const std::string& path) {
    CsvWriter w(path);
    int d = 0;
    for (int i = 0; i < bank.capacity(); ++i) {
        if (bank.slot(i)) d = static_cast<int>(bank.slot(i)->state.size());
    }
    std::vector<std::string> cols = {"slot", "t", "cond"};
    for (int j = 0; j < d; ++j) cols.push_back("x_" + std::to_string(j + 1));
    w.header(cols);
    for (int i = 0; i < bank.capacity(); ++i) {
        const auto& e = bank.slot(i);
        if (!e) continue;
        w.begin_row();
        w.field(static_cast<int64_t>(i));
        w.field(static_cast<int64_t>(e->t));
        w.field(static_cast<int64_t>(e->cond.label));
        for (double v : e->state) w.field(v);
        w.end_row();
    }
}

void write_points_csv(const std::vector<int>& labels, const std::vector<Vec>& points,
                      const std::string& path) {
    Dataset ds;
    ds.labels = labels;
    ds.points = points;
    write_dataset(ds, path);
}

Dataset read_dataset(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "label") {
        throw std::runtime_error("read_dataset: expected 'label' as first column in " + path);
    }
    Dataset ds;
    const size_t d = t.header.size() - 1;
    for (const auto& row : t.rows) {
        if (row.size() != d + 1) throw std::runtime_error("read_dataset: ragged row in " + path);
        ds.labels.push_back(std::stoi(row[0]));
        Vec x(d);
        for (size_t j = 0; j < d; ++j) x[j] = std::stod(row[j + 1]);
        ds.points.push_back(std::move(x));
    }
    return ds;
}

}  // namespace stdlab
