#include "hexmap/permutation.hpp"

#include <algorithm>
#include <stdexcept>

#include "hexmap/bits.hpp"
#include "hexmap/hash.hpp"

namespace hexmap {

namespace {

constexpr int kPrimalityRounds = 40;
constexpr unsigned long kTrialDivisionBound = 1'000'000;

bool is_probable_prime(const mpz_class& n) {
    return mpz_probab_prime_p(n.get_mpz_t(), kPrimalityRounds) > 0;
}

// Pollard-rho with Brent's cycle detection. n must be odd, composite and
// free of factors below the trial-division bound, so the loop terminates
// quickly for every width this scanner can produce.
mpz_class pollard_brent(const mpz_class& n) {
    for (unsigned long c = 1;; c++) {
        mpz_class x = 2, y = 2, d = 1, diff;
        unsigned long power = 1, lam = 0;
        auto step = [&](mpz_class& v) {
            v = (v * v + c) % n;
        };
        while (d == 1) {
            if (lam == power) {
                x = y;
                power *= 2;
                lam = 0;
            }
            step(y);
            lam++;
            diff = x > y ? x - y : y - x;
            if (diff == 0) break; // cycle without factor; retry with next c
            mpz_gcd(d.get_mpz_t(), diff.get_mpz_t(), n.get_mpz_t());
        }
        if (d != 1 && d != n) return d;
    }
}

void factor_into(const mpz_class& n, std::vector<mpz_class>& out) {
    if (n == 1) return;
    if (is_probable_prime(n)) {
        out.push_back(n);
        return;
    }
    mpz_class f = pollard_brent(n);
    factor_into(f, out);
    factor_into(n / f, out);
}

// 256 seed-derived bits, domain-separated; enough to reduce into [0, m)
// without noticeable bias for any modulus this tool builds.
mpz_class seeded_residue(uint64_t seed, uint8_t domain, const mpz_class& m) {
    uint8_t key[16] = {'h', 'e', 'x', 'm', 'a', 'p', '.', 'c', 'y', 'c', 'l', 'e', 0, 0, 0, domain};
    uint8_t msg[9];
    for (int i = 0; i < 8; i++) msg[i] = static_cast<uint8_t>(seed >> (8 * i));
    uint8_t wide[32];
    for (uint8_t half = 0; half < 2; half++) {
        msg[8] = half;
        u128 h = siphash24_128(std::span<const uint8_t, 16>(key, 16),
                               std::span<const uint8_t>(msg, sizeof(msg)));
        u128_to_bytes(h, std::span<uint8_t>(wide + 16 * half, 16));
    }
    mpz_class v;
    mpz_import(v.get_mpz_t(), sizeof(wide), 1, 1, 0, 0, wide);
    return v % m;
}

} // namespace

mpz_class find_prime(const mpz_class& n) {
    if (n < 2) return 2;
    mpz_class c = n + 1;
    if (mpz_even_p(c.get_mpz_t()) && c != 2) c++;
    while (!is_probable_prime(c)) c += 2;
    return c;
}

std::vector<mpz_class> factorize(const mpz_class& n) {
    std::vector<mpz_class> out;
    if (n <= 1) return out;
    mpz_class rem = n;
    while (mpz_even_p(rem.get_mpz_t())) {
        out.push_back(2);
        rem /= 2;
    }
    for (unsigned long d = 3; d <= kTrialDivisionBound && rem > 1; d += 2) {
        if (mpz_cmp_ui(rem.get_mpz_t(), d * d) < 0) {
            // what's left is prime
            out.push_back(rem);
            rem = 1;
            break;
        }
        if (mpz_divisible_ui_p(rem.get_mpz_t(), d)) {
            mpz_class dd(d);
            // d is prime here: smaller factors were already divided out
            while (mpz_divisible_ui_p(rem.get_mpz_t(), d)) {
                out.push_back(dd);
                rem /= dd;
            }
        }
    }
    factor_into(rem, out);
    std::sort(out.begin(), out.end());
    return out;
}

mpz_class find_generator(const mpz_class& p, uint64_t seed) {
    if (p == 2) return 1; // trivial group
    if (p == 3) return 2;
    mpz_class order = p - 1;

    std::vector<mpz_class> primes = factorize(order);
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());

    std::vector<mpz_class> cofactors;
    cofactors.reserve(primes.size());
    for (const auto& q : primes) cofactors.push_back(order / q);

    mpz_class g = seeded_residue(seed, 0x67, p - 3) + 2; // candidate in [2, p-2]
    mpz_class pw;
    for (;;) {
        bool primitive = true;
        for (const auto& cf : cofactors) {
            mpz_powm(pw.get_mpz_t(), g.get_mpz_t(), cf.get_mpz_t(), p.get_mpz_t());
            if (pw == 1) {
                primitive = false;
                break;
            }
        }
        if (primitive) return g;
        g += 1;
        if (g == p) g = 2;
    }
}

CycleParams CycleParams::create(const mpz_class& n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("cycle needs n >= 1");
    CycleParams cp;
    cp.n = n;
    cp.seed = seed;
    cp.p = find_prime(n);
    cp.g = find_generator(cp.p, seed);
    cp.start = seeded_residue(seed, 0x73, cp.p - 1) + 1;
    return cp;
}

CycleState::CycleState(CycleParams params) : CycleState(std::move(params), Shard{}) {}

CycleState::CycleState(CycleParams params, Shard shard)
    : params_(std::move(params)), current_(params_.start) {
    if (shard.shard_count == 0 || shard.shard_index >= shard.shard_count)
        throw std::invalid_argument("shard index out of range");
    stride_ = shard.shard_count;
    valid_skip_ = shard.shard_index;
    // quota = |{k < n : k == shard_index (mod shard_count)}|
    mpz_class idx(static_cast<unsigned long>(shard.shard_index));
    if (idx >= params_.n) {
        quota_ = 0;
    } else {
        mpz_class num = params_.n - idx + stride_ - 1;
        quota_ = num / stride_;
    }
}

std::optional<mpz_class> CycleState::next() {
    if (emitted_ >= quota_) return std::nullopt;
    for (;;) {
        // current <- current * g mod p, skipping residues > n
        scratch_ = current_ * params_.g;
        mpz_mod(current_.get_mpz_t(), scratch_.get_mpz_t(), params_.p.get_mpz_t());
        if (current_ > params_.n) continue;
        if (valid_skip_ > 0) {
            valid_skip_ -= 1;
            continue;
        }
        valid_skip_ = stride_ - 1;
        emitted_ += 1;
        return mpz_class(current_ - 1);
    }
}

} // namespace hexmap
