#include "tnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tnn {

std::vector<std::string> ChannelSchema::all_channels() const {
    std::vector<std::string> out = exogenous;
    out.insert(out.end(), ancillary.begin(), ancillary.end());
    out.insert(out.end(), targets.begin(), targets.end());
    return out;
}

double ChannelSchema::divisor_for(const std::string& channel) const {
    auto it = divisors.find(channel);
    if (it == divisors.end())
        throw SchemaError("no normalization divisor for channel '" + channel + "'");
    return it->second;
}

void ChannelSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& name : all_channels()) {
        if (!seen.insert(name).second)
            throw SchemaError("duplicate channel name '" + name + "'");
        if (divisor_for(name) <= 0.0)
            throw SchemaError("divisor for '" + name + "' must be > 0");
    }
    if (sample_time <= 0.0) throw SchemaError("sample time must be > 0");
    if (targets.empty()) throw SchemaError("schema needs at least one target channel");
}

FoldSet fold_set_from_name(const std::string& name) {
    if (name == "train") return FoldSet::Train;
    if (name == "fold1" || name == "fold-1") return FoldSet::Fold1;
    if (name == "fold2" || name == "fold-2") return FoldSet::Fold2;
    if (name == "generalization" || name == "gen") return FoldSet::Generalization;
    throw ConfigError("unknown fold set '" + name + "'");
}

const char* fold_set_name(FoldSet s) {
    switch (s) {
        case FoldSet::Train: return "train";
        case FoldSet::Fold1: return "fold1";
        case FoldSet::Fold2: return "fold2";
        case FoldSet::Generalization: return "generalization";
    }
    return "?";
}

std::pair<double, double> derive_vector_norms(double u_d, double u_q, double i_d, double i_q) {
    return {std::hypot(u_d, u_q), std::hypot(i_d, i_q)};
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) {
        // trim whitespace and a possible trailing \r
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, long row, const std::string& column) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("non-numeric cell '" + cell + "' in column '" + column + "', data row " +
                         std::to_string(row));
    }
}

// How one schema channel is filled from the CSV: directly, or derived from
// two d/q component columns.
struct ChannelSource {
    int direct = -1;
    int comp_d = -1;
    int comp_q = -1;
};

}  // namespace

std::vector<MeasurementProfile> ingest_csv(const std::string& path, const ChannelSchema& schema,
                                           std::vector<std::string>* warnings) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
    const std::vector<std::string> header = split_line(line);

    auto column_of = [&](const std::string& name) -> int {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : int(it - header.begin());
    };

    const int id_col = column_of("profile_id");
    if (id_col < 0) throw SchemaError("missing column 'profile_id'");

    const auto channels = schema.all_channels();
    std::vector<ChannelSource> sources(channels.size());
    std::set<int> used_cols{id_col};
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const std::string& name = channels[c];
        sources[c].direct = column_of(name);
        if (sources[c].direct >= 0) {
            used_cols.insert(sources[c].direct);
            continue;
        }
        // vector-norm channels may be derived from raw d/q components
        std::string dcol, qcol;
        if (name == "u_s") { dcol = "u_d"; qcol = "u_q"; }
        else if (name == "i_s") { dcol = "i_d"; qcol = "i_q"; }
        if (!dcol.empty()) {
            sources[c].comp_d = column_of(dcol);
            sources[c].comp_q = column_of(qcol);
        }
        if (sources[c].comp_d < 0 || sources[c].comp_q < 0)
            throw SchemaError("missing column '" + name + "'");
        used_cols.insert(sources[c].comp_d);
        used_cols.insert(sources[c].comp_q);
    }
    if (warnings) {
        for (std::size_t h = 0; h < header.size(); ++h)
            if (!used_cols.count(int(h)))
                warnings->push_back("ignoring unknown column '" + header[h] + "'");
    }

    std::vector<std::string> id_order;
    std::map<std::string, std::vector<Eigen::RowVectorXd>> rows_by_id;
    long row_index = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_line(line);
        if (fields.size() < header.size())
            throw ParseError("data row " + std::to_string(row_index) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        const std::string& id = fields[id_col];
        Eigen::RowVectorXd row(long(channels.size()));
        for (std::size_t c = 0; c < channels.size(); ++c) {
            double raw;
            if (sources[c].direct >= 0) {
                raw = parse_cell(fields[sources[c].direct], row_index, channels[c]);
            } else {
                const double d = parse_cell(fields[sources[c].comp_d], row_index, channels[c]);
                const double q = parse_cell(fields[sources[c].comp_q], row_index, channels[c]);
                raw = std::hypot(d, q);
            }
            const double v = raw / schema.divisor_for(channels[c]);
            if (!std::isfinite(v))
                throw NumericalError("non-finite value in column '" + channels[c] +
                                     "', data row " + std::to_string(row_index));
            row[long(c)] = v;
        }
        if (!rows_by_id.count(id)) id_order.push_back(id);
        rows_by_id[id].push_back(std::move(row));
        ++row_index;
    }

    std::vector<MeasurementProfile> profiles;
    for (const auto& id : id_order) {
        const auto& rows = rows_by_id[id];
        if (rows.size() < 2)
            throw SchemaError("profile '" + id + "' has fewer than 2 samples");
        MeasurementProfile p;
        p.id = id;
        p.values.resize(long(rows.size()), long(channels.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) p.values.row(long(r)) = rows[r];
        profiles.push_back(std::move(p));
    }
    if (profiles.empty()) throw ParseError("no data rows in '" + path + "'");
    return profiles;
}

std::vector<MeasurementProfile> split_subsequences(const MeasurementProfile& profile, long length) {
    if (length < 2) throw ArgumentError("subsequence length must be >= 2");
    std::vector<MeasurementProfile> out;
    const long K = profile.length();
    long start = 0;
    int index = 0;
    while (K - start >= 2) {
        const long len = std::min(length, K - start);
        if (len < 2) break;
        MeasurementProfile sub;
        sub.id = profile.id + "#" + std::to_string(index++);
        sub.values = profile.values.middleRows(start, len);
        out.push_back(std::move(sub));
        start += len;
    }
    return out;
}

FoldedProfiles make_folds(const std::vector<MeasurementProfile>& profiles, const FoldPlan& plan) {
    FoldedProfiles out;
    for (const auto& p : profiles) {
        // subsequence ids inherit their parent's fold assignment
        std::string key = p.id;
        if (!plan.assignment.count(key)) {
            const auto hash = key.find('#');
            if (hash != std::string::npos) key = key.substr(0, hash);
        }
        auto it = plan.assignment.find(key);
        if (it == plan.assignment.end())
            throw ConfigError("profile '" + p.id + "' is not assigned in the fold plan");
        switch (it->second) {
            case FoldSet::Train: out.train.push_back(p); break;
            case FoldSet::Fold1: out.fold1.push_back(p); break;
            case FoldSet::Fold2: out.fold2.push_back(p); break;
            case FoldSet::Generalization: out.generalization.push_back(p); break;
        }
    }
    if (out.fold1.empty()) throw ConfigError("fold-1 set is empty");
    if (out.fold2.empty()) throw ConfigError("fold-2 set is empty");
    if (out.generalization.empty()) throw ConfigError("generalization set is empty");
    return out;
}

}  // namespace tnn
