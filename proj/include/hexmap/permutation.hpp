#ifndef HEXMAP_PERMUTATION_HPP
#define HEXMAP_PERMUTATION_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <gmpxx.h>

namespace hexmap {

// One of shard_count interleaved sub-sequences of the cycle. Shard i takes
// emission positions i, i+count, i+2*count, ... of the unsharded sequence,
// so shards partition [0,n) without coordination.
struct Shard {
    uint32_t shard_index = 0;
    uint32_t shard_count = 1;
};

// Parameters of the full-cycle permutation of [0,n): iterating
// current <- current * g mod p over the multiplicative group mod p and
// skipping residues > n visits every index exactly once per cycle.
struct CycleParams {
    mpz_class n;      // space size
    mpz_class p;      // smallest prime > n
    mpz_class g;      // primitive root mod p
    mpz_class start;  // initial residue in [1, p-1], derived from seed
    uint64_t seed = 0;

    static CycleParams create(const mpz_class& n, uint64_t seed);
};

// Smallest prime > n (probabilistic Miller-Rabin with enough rounds that
// the answer is deterministic in practice; oracle-checked in tests).
mpz_class find_prime(const mpz_class& n);

// A primitive root mod p. Which root is returned is a deterministic
// function of seed. p = 2 yields the trivial generator 1.
mpz_class find_generator(const mpz_class& p, uint64_t seed);

// Prime factorization helpers, exposed for the generator-certification
// tests. Trial division to 10^6, then Pollard-rho (Brent) on what's left.
std::vector<mpz_class> factorize(const mpz_class& n);

class CycleState {
public:
    CycleState() = default;

    // Unsharded full cycle.
    explicit CycleState(CycleParams params);

    // Emissions restricted to positions == shard.shard_index modulo
    // shard.shard_count; quota is ceil((n - index) / count), so quotas over
    // all shards sum to n (empty shards when count > n get quota 0).
    CycleState(CycleParams params, Shard shard);

    // Next index in [0,n), or nullopt once this shard's quota is spent.
    std::optional<mpz_class> next();

    const CycleParams& params() const { return params_; }
    const mpz_class& quota() const { return quota_; }
    const mpz_class& emitted() const { return emitted_; }

private:
    CycleParams params_;
    mpz_class current_;
    mpz_class emitted_{0};
    mpz_class quota_{0};
    mpz_class valid_skip_{0}; // valid emissions to discard before the next one of ours
    uint64_t stride_ = 1;
    mpz_class scratch_;
};

inline CycleState shard_init(CycleParams params, Shard shard) {
    return CycleState(std::move(params), shard);
}

} // namespace hexmap

#endif
