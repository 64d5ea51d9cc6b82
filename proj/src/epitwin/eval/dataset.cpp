#include "epitwin/eval/dataset.hpp"

#include "epitwin/dsl/printer.hpp"
#include "epitwin/util/error.hpp"
#include "epitwin/util/fs.hpp"

#include <json.hpp>

#include <charconv>
#include <map>
#include <sstream>

namespace epitwin::eval {

const char* cadence_name(Cadence c)
{
    return c == Cadence::day ? "day" : "week";
}

Cadence cadence_from(const std::string& s)
{
    if (s == "day" || s == "daily")
        return Cadence::day;
    if (s == "week" || s == "weekly")
        return Cadence::week;
    raise(Errc::ingest_error, "cadence must be 'day' or 'week', got '" + s + "'");
}

sim::MetapopContext Dataset::context() const
{
    sim::MetapopContext ctx;
    ctx.contact = contact;
    ctx.population = ad::Tensor::from({L}, population);
    ctx.validate();
    return ctx;
}

Dataset Dataset::window(std::size_t t0, std::size_t len) const
{
    require(t0 + len <= T, Errc::contract_error,
            "window [" + std::to_string(t0) + ", " + std::to_string(t0 + len) +
                ") exceeds T=" + std::to_string(T));
    Dataset out = *this;
    out.T = len;
    out.values.resize(L * len * d);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < len; ++t)
            for (std::size_t f = 0; f < d; ++f)
                out.values[(l * len + t) * d + f] = at(l, t0 + t, f);
    return out;
}

ad::Tensor Dataset::target_matrix(std::size_t t0, std::size_t len) const
{
    require(t0 + len <= T, Errc::contract_error, "target window exceeds the dataset");
    std::vector<double> vals(len * L);
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t l = 0; l < L; ++l)
            vals[t * L + l] = target(l, t0 + t);
    return ad::Tensor::from({len, L}, std::move(vals));
}

namespace {

template <class T>
T meta_get(const nlohmann::json& meta, const char* key)
{
    if (!meta.contains(key))
        raise(Errc::ingest_error, std::string("meta.json is missing key '") + key + "'");
    try {
        return meta.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::ingest_error, std::string("meta.json key '") + key + "': " + e.what());
    }
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_index(const std::string& s, std::size_t& out)
{
    if (s.empty())
        return false;
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        return false;
    out = v;
    return true;
}

bool parse_value(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

} // namespace

Dataset ingest(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    const fs::path meta_path = dir / "meta.json";
    const fs::path data_path = dir / "data.csv";
    require(fs::exists(meta_path), Errc::ingest_error, "missing " + meta_path.string());
    require(fs::exists(data_path), Errc::ingest_error, "missing " + data_path.string());

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::ingest_error, "meta.json: " + std::string(e.what()));
    }

    Dataset data;
    data.L = meta_get<std::size_t>(meta, "L");
    data.T = meta_get<std::size_t>(meta, "T");
    data.d = meta_get<std::size_t>(meta, "d");
    data.feature_names = meta_get<std::vector<std::string>>(meta, "feature_names");
    data.target_feature = meta_get<std::size_t>(meta, "target_feature");
    data.cadence = cadence_from(meta_get<std::string>(meta, "cadence"));
    data.population = meta_get<std::vector<double>>(meta, "population");

    require(data.feature_names.size() == data.d, Errc::ingest_error,
            "feature_names length does not match d");
    require(data.target_feature < data.d, Errc::ingest_error, "target_feature out of range");
    require(data.population.size() == data.L, Errc::ingest_error,
            "population length does not match L");

    if (!meta.contains("contact_matrix"))
        raise(Errc::ingest_error, "meta.json is missing key 'contact_matrix'");
    if (meta["contact_matrix"].is_string() && meta["contact_matrix"] == "identity") {
        std::vector<double> c(data.L * data.L, 0.0);
        for (std::size_t i = 0; i < data.L; ++i)
            c[i * data.L + i] = 1.0;
        data.contact = ad::Tensor::from({data.L, data.L}, std::move(c));
    } else {
        auto rows = meta_get<std::vector<std::vector<double>>>(meta, "contact_matrix");
        require(rows.size() == data.L, Errc::ingest_error, "contact_matrix must be L x L");
        std::vector<double> c;
        for (const auto& row : rows) {
            require(row.size() == data.L, Errc::ingest_error, "contact_matrix must be L x L");
            c.insert(c.end(), row.begin(), row.end());
        }
        data.contact = ad::Tensor::from({data.L, data.L}, std::move(c));
    }

    data.values.assign(data.L * data.T * data.d, 0.0);
    std::vector<char> seen(data.L * data.T * data.d, 0);
    std::vector<int> first_row(data.L * data.T * data.d, 0);

    std::istringstream in(read_file(data_path));
    std::string line;
    int row_no = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r")
            continue;
        auto cells = split_csv_line(line);
        if (!header_checked) {
            header_checked = true;
            if (cells.size() == 4 && cells[0] == "location")
                continue; // header row
        }
        if (cells.size() != 4)
            raise(Errc::ingest_error,
                  "data.csv row " + std::to_string(row_no) + ": expected 4 columns, got " +
                      std::to_string(cells.size()));
        std::size_t l, t, f;
        double v;
        if (!parse_index(cells[0], l))
            raise(Errc::ingest_error,
                  "data.csv row " + std::to_string(row_no) + ": non-numeric location '" +
                      cells[0] + "'");
        if (!parse_index(cells[1], t))
            raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) +
                                          ": non-numeric t '" + cells[1] + "'");
        if (!parse_index(cells[2], f)) {
            // Feature may be given by name.
            f = data.d;
            for (std::size_t i = 0; i < data.feature_names.size(); ++i)
                if (data.feature_names[i] == cells[2])
                    f = i;
            if (f == data.d)
                raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) +
                                              ": unknown feature '" + cells[2] + "'");
        }
        if (!parse_value(cells[3], v))
            raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) +
                                          ": non-numeric value '" + cells[3] + "'");
        if (l >= data.L)
            raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) + ": location " +
                                          std::to_string(l) + " but meta declares L=" +
                                          std::to_string(data.L));
        if (t >= data.T)
            raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) + ": t " +
                                          std::to_string(t) + " but meta declares T=" +
                                          std::to_string(data.T));
        if (f >= data.d)
            raise(Errc::ingest_error, "data.csv row " + std::to_string(row_no) +
                                          ": feature index out of range");
        std::size_t idx = (l * data.T + t) * data.d + f;
        if (seen[idx])
            raise(Errc::ingest_error,
                  "data.csv row " + std::to_string(row_no) + ": duplicate cell (l=" +
                      std::to_string(l) + ", t=" + std::to_string(t) + ", f=" +
                      std::to_string(f) + ") first set at row " + std::to_string(first_row[idx]));
        seen[idx] = 1;
        first_row[idx] = row_no;
        data.values[idx] = v;
    }

    // Gap policy: forward-fill along t per (l, f), zero-fill leading gaps.
    long filled = 0;
    for (std::size_t l = 0; l < data.L; ++l)
        for (std::size_t f = 0; f < data.d; ++f) {
            double last = 0.0;
            for (std::size_t t = 0; t < data.T; ++t) {
                std::size_t idx = (l * data.T + t) * data.d + f;
                if (seen[idx]) {
                    last = data.values[idx];
                } else {
                    data.values[idx] = last;
                    ++filled;
                }
            }
        }
    if (filled > 0)
        data.provenance = "gap policy filled " + std::to_string(filled) +
                          " cells (forward-fill, zero-fill leading)";

    for (std::size_t l = 0; l < data.L; ++l)
        for (std::size_t t = 0; t < data.T; ++t)
            require(data.target(l, t) >= 0.0, Errc::ingest_error,
                    "target series negative at (l=" + std::to_string(l) +
                        ", t=" + std::to_string(t) + ")");
    return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir)
{
    nlohmann::ordered_json meta;
    meta["L"] = data.L;
    meta["T"] = data.T;
    meta["d"] = data.d;
    meta["feature_names"] = data.feature_names;
    meta["target_feature"] = data.target_feature;
    meta["cadence"] = cadence_name(data.cadence);
    meta["population"] = data.population;
    nlohmann::ordered_json contact = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < data.L; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < data.L; ++j)
            row.push_back(data.contact.at(i * data.L + j));
        contact.push_back(row);
    }
    meta["contact_matrix"] = contact;
    if (!data.provenance.empty())
        meta["provenance"] = data.provenance;
    atomic_write_file(dir / "meta.json", meta.dump(2) + "\n");

    std::ostringstream csv;
    csv << "location,t,feature,value\n";
    for (std::size_t l = 0; l < data.L; ++l)
        for (std::size_t t = 0; t < data.T; ++t)
            for (std::size_t f = 0; f < data.d; ++f)
                csv << l << ',' << t << ',' << f << ',' << dsl::format_number(data.at(l, t, f))
                    << '\n';
    atomic_write_file(dir / "data.csv", csv.str());
}

} // namespace epitwin::eval
