#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "chasm/frame.hpp"
#include "chasm/geometry.hpp"

namespace chasm {

// One indexed hash plus the frame it came from. Identical hashes from
// different frames are distinct postings.
struct Posting {
    BinaryHash hash;
    FrameRef frame;
};

struct IndexMatch {
    std::uint32_t posting_id = 0;
    int distance = 0;

    bool operator==(const IndexMatch&) const = default;
};

// Result of a radius query. raw_candidates counts postings gathered from the
// substring tables before dedup and distance filtering (duplicates counted
// once per table hit) -- the per-index cost the pipeline tracks.
struct LookupResult {
    std::vector<IndexMatch> matches;
    std::uint64_t raw_candidates = 0;
};

// Splits an n-bit hash into `parts` contiguous substrings in ascending bit
// order, each returned as the integer value of its n/parts bits. Substring
// width must fit a 64-bit word.
std::vector<std::uint64_t> split_substrings(const BinaryHash& h, int parts);

// Exact r-neighbor lookup structure: `parts` exact-match tables, one per
// hash substring. A query within Hamming distance r <= parts-1 of a stored
// hash leaves at least one substring untouched (pigeonhole), so gathering
// exact matches per table finds every true neighbor.
class MultiIndex {
public:
    MultiIndex(int n_bits, int parts);

    int bits() const { return n_bits_; }
    int parts() const { return parts_; }
    std::size_t size() const { return postings_.size(); }
    const Posting& posting(std::uint32_t id) const { return postings_[id]; }
    std::span<const Posting> postings() const { return postings_; }

    std::uint32_t insert(const BinaryHash& h, FrameRef frame);

    // Gather -> dedup by posting id -> distance filter. Refuses radius >
    // parts-1 (completeness would fail) unless allow_incomplete is set.
    // Matches come back sorted by posting id.
    LookupResult lookup(const BinaryHash& h, int radius, bool allow_incomplete = false) const;

    // Postings gathered across tables for this query, before any filtering.
    std::uint64_t candidate_count(const BinaryHash& h) const;

    // Total entries across all tables (== size() * parts()).
    std::uint64_t table_entry_count() const;

    void save(std::ostream& out) const;
    static MultiIndex load(std::istream& in);

private:
    int n_bits_;
    int parts_;
    std::vector<Posting> postings_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> tables_;
};

// Linear-scan oracle with the same contract as MultiIndex::lookup (no radius
// restriction). Posting ids are indices into the span.
LookupResult brute_force_lookup(std::span<const Posting> postings, const BinaryHash& h,
                                int radius);

}  // namespace chasm
