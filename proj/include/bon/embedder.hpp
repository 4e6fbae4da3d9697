#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/ngrams.hpp"
#include "bon/nn.hpp"
#include "bon/rng.hpp"

namespace bon {

/// Learned n-gram embedding table. Row id holds the embedding of vocabulary
/// entry id (specials included; SOS doubles as the decoder start symbol).
/// A sentence vector is the plain sum of the rows of its bag, so a gram that
/// appears twice contributes twice.
template <typename T>
struct Embedder {
    Param<T> table;

    Embedder() = default;

    Embedder(int vocab_size, int dim, Rng& rng, double scale = 0.1,
             std::string name = "embedding")
        : table(std::move(name), vocab_size, dim) {
        init_embedding(table, rng, scale);
    }

    int dim() const { return table.v.cols(); }
    int vocab_size() const { return table.v.rows(); }

    /// out += row(id) for every id, multiplicity counted.
    void forward(const std::vector<int>& ids, Vec<T>& out) const {
        require(static_cast<int>(out.size()) == dim(), "output dim");
        const int d = dim();
        for (int id : ids) {
            require(id >= 0 && id < vocab_size(), "id range");
            axpy(out, T(1), table.v.row(id));
        }
        (void)d;
    }

    Vec<T> sum_rows(const std::vector<int>& ids) const {
        Vec<T> v(static_cast<size_t>(dim()), T(0));
        forward(ids, v);
        return v;
    }

    Vec<T> sentence_vector(const SentenceNGramSet& set) const { return sum_rows(set.flat_ids()); }

    const T* row(int id) const { return table.v.row(id); }

    /// Scatter-add: every id in the bag receives the same upstream gradient.
    void backward(const std::vector<int>& ids, const Vec<T>& grad) {
        require(static_cast<int>(grad.size()) == dim(), "grad dim");
        for (int id : ids) backward_row(id, grad);
    }

    void backward_row(int id, const Vec<T>& grad) {
        T* row = table.g.row(id);
        for (size_t k = 0; k < grad.size(); ++k) row[k] += grad[k];
    }

    /// L2 norm of one entry's embedding.
    double entry_norm(int id) const {
        const T* row = table.v.row(id);
        double acc = 0.0;
        for (int k = 0; k < dim(); ++k) {
            acc += static_cast<double>(row[k]) * static_cast<double>(row[k]);
        }
        return std::sqrt(acc);
    }

private:
    static void require(bool ok, const char* what) {
        if (!ok) throw std::logic_error(std::string("Embedder: bad ") + what);
    }
};

}  // namespace bon
