#ifndef BLOWUP_IO_HPP
#define BLOWUP_IO_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "numcore.hpp"

namespace blowup {

struct IoError : Error {
    using Error::Error;
};

// Shortest round-trip is not needed; 17 significant digits always round-trips.
inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> col) {
        if (!columns.empty() && col.size() != columns.front().size())
            throw std::invalid_argument("Table: column '" + name + "' has mismatched length");
        header.push_back(std::move(name));
        columns.push_back(std::move(col));
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline std::string to_csv(const Table& t) {
    std::string s;
    for (std::size_t j = 0; j < t.header.size(); ++j) s += (j ? "," : "") + t.header[j];
    s += "\n";
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.columns.size(); ++j) s += (j ? "," : "") + format17(t.columns[j][i]);
        s += "\n";
    }
    return s;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("write failed for '" + path + "'");
}

inline Table read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    Table t;
    std::string line;
    if (!std::getline(f, line)) throw IoError("'" + path + "' is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.assign(t.header.size(), {});
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(ss, cell, ',')) {
            if (j >= t.columns.size()) throw IoError("'" + path + "': too many fields");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0') throw IoError("'" + path + "': bad number '" + cell + "'");
            t.columns[j++].push_back(v);
        }
        if (j != t.columns.size()) throw IoError("'" + path + "': too few fields");
    }
    return t;
}

// FNV-1a, 64 bit, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
// rethrown (lowest index first) after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::exception_ptr> errs(n);
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errs[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace blowup

#endif
