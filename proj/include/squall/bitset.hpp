#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

namespace squall {

/// Fixed-size bitset over 64-bit blocks. State sets everywhere in the tool
/// are instances of this; size is the number of states and never changes
/// after construction.
class Bitset {
  public:
    Bitset() = default;
    explicit Bitset(std::size_t size, bool value = false)
        : size_(size), blocks_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
        trim();
    }

    std::size_t size() const { return size_; }

    bool get(std::size_t i) const { return (blocks_[i >> 6] >> (i & 63)) & 1; }
    void set(std::size_t i, bool value = true) {
        if (value)
            blocks_[i >> 6] |= std::uint64_t{1} << (i & 63);
        else
            blocks_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : blocks_) n += static_cast<std::size_t>(__builtin_popcountll(b));
        return n;
    }

    bool any() const {
        for (auto b : blocks_)
            if (b) return true;
        return false;
    }
    bool none() const { return !any(); }
    bool full() const { return count() == size_; }

    /// Index of the first set bit, or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find_first() const {
        for (std::size_t w = 0; w < blocks_.size(); ++w)
            if (blocks_[w]) return (w << 6) + static_cast<std::size_t>(__builtin_ctzll(blocks_[w]));
        return npos;
    }
    /// Index of the first set bit strictly after i, or npos.
    std::size_t find_next(std::size_t i) const {
        ++i;
        if (i >= size_) return npos;
        std::size_t w = i >> 6;
        std::uint64_t block = blocks_[w] & (~std::uint64_t{0} << (i & 63));
        while (true) {
            if (block) return (w << 6) + static_cast<std::size_t>(__builtin_ctzll(block));
            if (++w == blocks_.size()) return npos;
            block = blocks_[w];
        }
    }

    Bitset& operator&=(Bitset const& other) {
        for (std::size_t w = 0; w < blocks_.size(); ++w) blocks_[w] &= other.blocks_[w];
        return *this;
    }
    Bitset& operator|=(Bitset const& other) {
        for (std::size_t w = 0; w < blocks_.size(); ++w) blocks_[w] |= other.blocks_[w];
        return *this;
    }
    Bitset& operator-=(Bitset const& other) {
        for (std::size_t w = 0; w < blocks_.size(); ++w) blocks_[w] &= ~other.blocks_[w];
        return *this;
    }

    friend Bitset operator&(Bitset a, Bitset const& b) { return a &= b; }
    friend Bitset operator|(Bitset a, Bitset const& b) { return a |= b; }
    friend Bitset operator-(Bitset a, Bitset const& b) { return a -= b; }

    Bitset complement() const {
        Bitset result(size_, true);
        for (std::size_t w = 0; w < blocks_.size(); ++w) result.blocks_[w] &= ~blocks_[w];
        return result;
    }

    bool operator==(Bitset const& other) const = default;

    bool is_subset_of(Bitset const& other) const {
        for (std::size_t w = 0; w < blocks_.size(); ++w)
            if (blocks_[w] & ~other.blocks_[w]) return false;
        return true;
    }
    bool intersects(Bitset const& other) const {
        for (std::size_t w = 0; w < blocks_.size(); ++w)
            if (blocks_[w] & other.blocks_[w]) return true;
        return false;
    }

    std::vector<std::size_t> to_indices() const {
        std::vector<std::size_t> result;
        result.reserve(count());
        for (std::size_t i = find_first(); i != npos; i = find_next(i)) result.push_back(i);
        return result;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(size_);
        for (std::size_t i = 0; i < size_; ++i) s += get(i) ? '1' : '0';
        return s;
    }

  private:
    void trim() {
        if (size_ & 63) blocks_.back() &= (~std::uint64_t{0}) >> (64 - (size_ & 63));
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> blocks_;
};

}  // namespace squall
