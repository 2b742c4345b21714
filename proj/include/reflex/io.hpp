#pragma once

#include "reflex/analysis.hpp"
#include "reflex/org_log.hpp"
#include "reflex/types.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace reflex {

// Fixed-precision time/value formatting keeps output byte-stable for a given
// sequence of doubles.
inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Append-only CSV log. If the writer dies before finish() the file ends with
// a truncation marker so partial logs from aborted runs are recognizable.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path &path, const std::string &header) : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot open for writing: " + path.string());
        }
        out_ << header << "\n";
    }

    ~CsvWriter() {
        if (out_.is_open() && !finished_) {
            out_ << "# truncated\n";
        }
    }

    CsvWriter(const CsvWriter &) = delete;
    CsvWriter &operator=(const CsvWriter &) = delete;

    void row(const std::vector<std::string> &cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i != 0) {
                out_ << ",";
            }
            out_ << cells[i];
        }
        out_ << "\n";
    }

    void finish() {
        finished_ = true;
        out_.close();
    }

private:
    std::ofstream out_;
    bool finished_ = false;
};

// Append-only JSON Lines log with the same truncation convention.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path &path) : out_(path) {
        if (!out_) {
            throw std::runtime_error("cannot open for writing: " + path.string());
        }
    }

    ~JsonlWriter() {
        if (out_.is_open() && !finished_) {
            out_ << R"({"event":"truncated"})" << "\n";
        }
    }

    JsonlWriter(const JsonlWriter &) = delete;
    JsonlWriter &operator=(const JsonlWriter &) = delete;

    void write(const nlohmann::json &j) { out_ << j.dump() << "\n"; }

    void finish() {
        finished_ = true;
        out_.close();
    }

private:
    std::ofstream out_;
    bool finished_ = false;
};

inline void save_reference(const ReferenceTrace &trace, const std::filesystem::path &path) {
    CsvWriter w(path, "time_ms,frequency_hz");
    for (const auto &p : trace.points) {
        w.row({format_value(p.t), format_value(p.hz)});
    }
    w.finish();
}

inline ReferenceTrace load_reference(const std::filesystem::path &path, double tolerance = 0.05) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open reference file: " + path.string());
    }
    ReferenceTrace trace;
    trace.tolerance = tolerance;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (line_no == 1 && line.find("time_ms") != std::string::npos) {
            continue;
        }
        std::istringstream ss(line);
        std::string t_str, f_str;
        if (!std::getline(ss, t_str, ',') || !std::getline(ss, f_str)) {
            throw std::runtime_error("reference file: malformed line " + std::to_string(line_no));
        }
        FrequencyPoint p;
        try {
            p.t = std::stod(t_str);
            p.hz = std::stod(f_str);
        } catch (const std::exception &) {
            throw std::runtime_error("reference file: non-numeric value at line " +
                                     std::to_string(line_no));
        }
        if (p.hz < 0.0) {
            throw std::runtime_error("reference file: negative frequency at line " +
                                     std::to_string(line_no));
        }
        if (!trace.points.empty() && p.t <= trace.points.back().t) {
            throw std::runtime_error("reference file: time column must be strictly increasing");
        }
        trace.points.push_back(p);
    }
    if (trace.points.empty()) {
        throw std::runtime_error("reference file: no data points: " + path.string());
    }
    return trace;
}

inline void save_frequency_series(const FrequencySeries &series,
                                  const std::filesystem::path &path) {
    CsvWriter w(path, "time_ms,frequency_hz");
    for (const auto &p : series) {
        w.row({format_value(p.t), format_value(p.hz)});
    }
    w.finish();
}

inline void save_psth(const Psth &h, const std::filesystem::path &path) {
    CsvWriter w(path, "bin_start_ms,count");
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        w.row({format_value(h.bin_start(i)), std::to_string(h.counts[i])});
    }
    w.finish();
}

} // namespace reflex
