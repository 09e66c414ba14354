#pragma once

// Batched forward/backward engine behind the public neural API. Samples are
// columns; the same code runs in double (gradient checks, public ops) and in
// float (training, inference).

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimofb/error.hpp"
#include "mimofb/neural.hpp"

namespace mimofb::detail {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

inline constexpr double kDegenerateNorm = 1e-30;

template <class S>
struct Dense {
    Mat<S> w;
    Vec<S> b;
    Activation act = Activation::Relu;
};

template <class S>
struct DenseGrad {
    Mat<S> w;
    Vec<S> b;
};

template <class S>
struct Grads {
    std::vector<DenseGrad<S>> enc;
    std::vector<DenseGrad<S>> dec;
};

template <class S>
struct Cache {
    std::vector<Mat<S>> enc_in; // input of each receiver layer
    Mat<S> soft;                // tanh output of the receiver, B x n
    std::vector<Mat<S>> dec_in; // input of each transmitter layer; dec_in[0] are the bits
    Mat<S> pre;                 // transmitter output before normalisation, 2N_t x n
    Vec<S> norms;               // ||pre(:, k)||
    Mat<S> out;                 // normalised output
};

template <class S>
Dense<S> to_dense(const LayerParams& p)
{
    return {p.weight.cast<S>(), p.bias.cast<S>(), p.activation};
}

template <class S>
LayerParams to_params(const Dense<S>& d)
{
    return {d.w.template cast<double>(), d.b.template cast<double>(), d.act};
}

template <class M>
void apply_hidden(M& z, Activation act)
{
    using S = typename M::Scalar;
    switch (act) {
    case Activation::Relu: z = z.cwiseMax(S(0)); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Identity: break;
    default: fail(ErrorCode::InvalidArgument, "activation not valid for a hidden layer");
    }
}

template <class S>
void hidden_backward(Mat<S>& grad, const Mat<S>& activated, Activation act)
{
    switch (act) {
    case Activation::Relu: grad = (activated.array() > S(0)).select(grad, S(0)); break;
    case Activation::Tanh: grad = (grad.array() * (S(1) - activated.array().square())).matrix(); break;
    case Activation::Identity: break;
    default: fail(ErrorCode::InvalidArgument, "activation not valid for a hidden layer");
    }
}

template <class S>
class Network {
public:
    explicit Network(const FeedbackModel& model)
    {
        model.validate();
        for (const auto& l : model.encoder)
            enc.push_back(to_dense<S>(l));
        for (const auto& l : model.decoder)
            dec.push_back(to_dense<S>(l));
    }

    void export_to(FeedbackModel& model) const
    {
        for (std::size_t i = 0; i < enc.size(); ++i)
            model.encoder[i] = to_params(enc[i]);
        for (std::size_t i = 0; i < dec.size(); ++i)
            model.decoder[i] = to_params(dec[i]);
    }

    // Receiver forward. `uniforms` (B x n, values in [0,1)) drive the
    // stochastic quantiser in Train mode and are ignored otherwise.
    void encode(const Mat<S>& x, BinarizeMode mode, const Mat<S>* uniforms, Cache<S>& c) const
    {
        c.enc_in.resize(enc.size());
        c.enc_in[0] = x;
        for (std::size_t i = 0; i < enc.size(); ++i) {
            Mat<S> z = enc[i].w * c.enc_in[i];
            z.colwise() += enc[i].b;
            if (i + 1 < enc.size()) {
                apply_hidden(z, enc[i].act);
                c.enc_in[i + 1] = std::move(z);
            } else {
                c.soft = z.array().tanh().matrix();
            }
        }
        Mat<S> bits(c.soft.rows(), c.soft.cols());
        switch (mode) {
        case BinarizeMode::Soft: bits = c.soft; break;
        case BinarizeMode::Infer: bits = (c.soft.array() >= S(0)).select(Mat<S>::Constant(bits.rows(), bits.cols(), S(1)), S(-1)); break;
        case BinarizeMode::Train:
            if (!uniforms || uniforms->rows() != bits.rows() || uniforms->cols() != bits.cols())
                fail(ErrorCode::ShapeMismatch, "binarisation noise shape mismatch");
            for (Eigen::Index j = 0; j < bits.cols(); ++j)
                for (Eigen::Index k = 0; k < bits.rows(); ++k)
                    bits(k, j) = stochastic_binarize<S>(c.soft(k, j), (*uniforms)(k, j));
            break;
        }
        c.dec_in.resize(dec.size());
        c.dec_in[0] = std::move(bits);
    }

    // Transmitter forward from c.dec_in[0].
    void decode(Cache<S>& c) const
    {
        for (std::size_t i = 0; i < dec.size(); ++i) {
            Mat<S> z = dec[i].w * c.dec_in[i];
            z.colwise() += dec[i].b;
            if (i + 1 < dec.size()) {
                apply_hidden(z, dec[i].act);
                c.dec_in[i + 1] = std::move(z);
            } else {
                c.pre = std::move(z);
            }
        }
        c.norms = c.pre.colwise().norm().transpose();
        for (Eigen::Index j = 0; j < c.norms.size(); ++j)
            if (!(static_cast<double>(c.norms(j)) >= kDegenerateNorm))
                fail(ErrorCode::DegenerateOutput, "transmitter output norm vanished before normalisation");
        c.out = c.pre * c.norms.cwiseInverse().asDiagonal();
    }

    void forward(const Mat<S>& x, BinarizeMode mode, const Mat<S>* uniforms, Cache<S>& c) const
    {
        encode(x, mode, uniforms, c);
        decode(c);
    }

    // Backward from dL/d(out). Writes (not accumulates) into g.
    void backward(const Cache<S>& c, const Mat<S>& d_out, Grads<S>& g) const
    {
        g.enc.resize(enc.size());
        g.dec.resize(dec.size());

        // Normalisation: dL/dz = (I - w w^T) dL/dw / ||z||, columnwise.
        const Eigen::Matrix<S, 1, Eigen::Dynamic> proj = (c.out.array() * d_out.array()).colwise().sum();
        Mat<S> grad = (d_out - c.out * proj.asDiagonal()) * c.norms.cwiseInverse().asDiagonal();

        for (std::size_t i = dec.size(); i-- > 0;) {
            g.dec[i].w.noalias() = grad * c.dec_in[i].transpose();
            g.dec[i].b = grad.rowwise().sum();
            Mat<S> down = dec[i].w.transpose() * grad;
            if (i > 0)
                hidden_backward(down, c.dec_in[i], dec[i - 1].act);
            grad = std::move(down);
        }

        // Straight-through: dL/dsoft = dL/dbits, then through tanh.
        grad = (grad.array() * (S(1) - c.soft.array().square())).matrix();
        for (std::size_t i = enc.size(); i-- > 0;) {
            g.enc[i].w.noalias() = grad * c.enc_in[i].transpose();
            g.enc[i].b = grad.rowwise().sum();
            if (i == 0)
                break;
            Mat<S> down = enc[i].w.transpose() * grad;
            hidden_backward(down, c.enc_in[i], enc[i - 1].act);
            grad = std::move(down);
        }
    }

    std::vector<Dense<S>> enc;
    std::vector<Dense<S>> dec;
};

// Loss -(1/scale) * sum_k ||H_k w_k||^2 over the columns of `w` and its
// gradient with respect to the stacked [Re w; Im w]. Returns the summed gain.
template <class S>
double beamforming_loss_grad(std::span<const ComplexMatrix* const> channels, const Mat<S>& w, double scale,
                             Mat<S>& d_out)
{
    const Eigen::Index n_tx = w.rows() / 2;
    d_out.resize(w.rows(), w.cols());
    double total_gain = 0.0;
    std::vector<cplx> wc(static_cast<std::size_t>(n_tx));
    std::vector<cplx> hw;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const ComplexMatrix& h = *channels[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < n_tx; ++k)
            wc[static_cast<std::size_t>(k)] = {static_cast<double>(w(k, j)), static_cast<double>(w(k + n_tx, j))};
        hw.assign(h.rows(), cplx{});
        for (std::size_t r = 0; r < h.rows(); ++r)
            for (std::size_t k = 0; k < h.cols(); ++k)
                hw[r] += h(r, k) * wc[k];
        double gain = 0.0;
        for (const auto& v : hw)
            gain += std::norm(v);
        total_gain += gain;
        // d||Hw||^2 / d[Re w; Im w] = 2 [Re(H^H H w); Im(H^H H w)].
        for (std::size_t k = 0; k < h.cols(); ++k) {
            cplx acc = 0.0;
            for (std::size_t r = 0; r < h.rows(); ++r)
                acc += std::conj(h(r, k)) * hw[r];
            d_out(static_cast<Eigen::Index>(k), j) = static_cast<S>(-2.0 * acc.real() / scale);
            d_out(static_cast<Eigen::Index>(k) + n_tx, j) = static_cast<S>(-2.0 * acc.imag() / scale);
        }
    }
    return total_gain;
}

} // namespace mimofb::detail
