#include "mkrem/recon.hpp"

#include <algorithm>
#include <cmath>

namespace mkrem {

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "mlem") return Algorithm::mlem;
    if (name == "mlem_f") return Algorithm::mlem_f;
    if (name == "kem") return Algorithm::kem;
    if (name == "krem") return Algorithm::krem;
    if (name == "mkrem") return Algorithm::mkrem;
    throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::mlem: return "mlem";
        case Algorithm::mlem_f: return "mlem_f";
        case Algorithm::kem: return "kem";
        case Algorithm::krem: return "krem";
        case Algorithm::mkrem: return "mkrem";
    }
    return "?";
}

void ReconConfig::validate() const {
    if (n_iters < 1) throw std::invalid_argument("ReconConfig: n_iters must be >= 1");
    if (beta1 < 0.0 || beta2 < 0.0) throw std::invalid_argument("ReconConfig: betas must be >= 0");
    if (record_every < 1) throw std::invalid_argument("ReconConfig: record_every must be >= 1");
    if (!(ratio_floor > 0.0)) throw std::invalid_argument("ReconConfig: ratio_floor must be > 0");
    if (filter_window < 1 || filter_window % 2 == 0)
        throw std::invalid_argument("ReconConfig: filter_window must be odd");
    if (!(filter_sigma > 0.0)) throw std::invalid_argument("ReconConfig: filter_sigma must be > 0");
}

namespace {

double auto_floor(const DenseVector& denom_base) {
    const double mean = vec_sum(denom_base) / static_cast<double>(denom_base.size());
    return 1e-8 * std::max(mean, 1e-300);
}

DenseVector floored_ratio_backprojection(const SystemModel& model, const DenseVector& pbar,
                                         const DenseVector& p, double ratio_floor) {
    return model.backproject(hadamard_div(p, pbar, ratio_floor));
}

}  // namespace

DenseVector mlem_step(const SystemModel& model, const DenseVector& x,
                      const DenseVector* penalty_grad, const DenseVector& p, double denom_floor,
                      double ratio_floor, const DenseVector* sens) {
    DenseVector sens_local;
    if (!sens) {
        sens_local = model.sensitivity();
        sens = &sens_local;
    }
    const DenseVector back = floored_ratio_backprojection(model, model.forward(x), p, ratio_floor);
    DenseVector denom = *sens;
    if (penalty_grad) axpy(1.0, *penalty_grad, denom);
    const double floor = denom_floor > 0.0 ? denom_floor : auto_floor(*sens);
    DenseVector next = hadamard_div(hadamard(x, back), denom, floor);
    for (double& v : next) v = std::max(v, 0.0);
    return next;
}

DenseVector kem_step(const SystemModel& model, const SparseMatrix& k, const DenseVector& a,
                     const DenseVector& p, double denom_floor, double ratio_floor,
                     const DenseVector* sens) {
    return mkrem_step(model, k, a, p, nullptr, nullptr, 0.0, 0.0, denom_floor, ratio_floor, sens);
}

DenseVector mkrem_step(const SystemModel& model, const SparseMatrix& k_ma, const DenseVector& a,
                       const DenseVector& p, const DenseVector* dict_field,
                       const LaplacianPack* lap, double beta1, double beta2, double denom_floor,
                       double ratio_floor, const DenseVector* sens, bool grad_outside_kt) {
    DenseVector sens_local;
    if (!sens) {
        sens_local = model.sensitivity();
        sens = &sens_local;
    }
    if (beta1 > 0.0 && !dict_field)
        throw std::invalid_argument("mkrem_step: beta1 > 0 requires the dictionary field");
    if (beta2 > 0.0 && !lap)
        throw std::invalid_argument("mkrem_step: beta2 > 0 requires the Laplacian pack");

    const DenseVector back =
        floored_ratio_backprojection(model, model.forward(matvec(k_ma, a)), p, ratio_floor);
    const DenseVector numerator = hadamard(a, matvec_transpose(k_ma, back));

    DenseVector denom;
    if (!grad_outside_kt) {
        DenseVector bracket = *sens;
        if (beta1 > 0.0) {
            for (std::size_t i = 0; i < bracket.size(); ++i)
                bracket[i] += beta1 * (a[i] - (*dict_field)[i]);
        }
        if (beta2 > 0.0) axpy(beta2, lap->apply_qa(k_ma, a), bracket);
        denom = matvec_transpose(k_ma, bracket);
    } else {
        denom = matvec_transpose(k_ma, *sens);
        if (beta1 > 0.0)
            for (std::size_t i = 0; i < denom.size(); ++i)
                denom[i] += beta1 * (a[i] - (*dict_field)[i]);
        if (beta2 > 0.0) axpy(beta2, lap->apply_qa(k_ma, a), denom);
    }

    const double floor =
        denom_floor > 0.0 ? denom_floor : auto_floor(matvec_transpose(k_ma, *sens));
    DenseVector next = hadamard_div(numerator, denom, floor);
    for (double& v : next) v = std::max(v, 0.0);
    return next;
}

DenseVector gaussian_postfilter(const DenseVector& img, int width, int height, int window,
                                double sigma) {
    if (img.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("gaussian_postfilter: image size mismatch");
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("gaussian_postfilter: window must be odd");
    const int half = window / 2;

    std::vector<double> kernel(static_cast<std::size_t>(window) * window);
    double total = 0.0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>(dy + half) * window + (dx + half)] = w;
            total += w;
        }
    for (double& w : kernel) w /= total;

    DenseVector out(img.size());
    for (int iy = 0; iy < height; ++iy)
        for (int ix = 0; ix < width; ++ix) {
            double acc = 0.0;
            for (int dy = -half; dy <= half; ++dy) {
                const int cy = std::clamp(iy + dy, 0, height - 1);
                for (int dx = -half; dx <= half; ++dx) {
                    const int cx = std::clamp(ix + dx, 0, width - 1);
                    acc += kernel[static_cast<std::size_t>(dy + half) * window + (dx + half)] *
                           img[static_cast<std::size_t>(cy) * width + cx];
                }
            }
            out[static_cast<std::size_t>(iy) * width + ix] = acc;
        }
    return out;
}

double poisson_loglik(const SystemModel& model, const DenseVector& x, const DenseVector& p) {
    const DenseVector pbar = model.forward(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc -= pbar[i];
        if (p[i] > 0.0) acc += p[i] * std::log(std::max(pbar[i], 1e-300));
    }
    return acc;
}

ReconResult run(const SystemModel& model, const ReconConfig& cfg, const SparseMatrix* kernel,
                const DictionaryPack* dict, const LaplacianPack* lap, const DenseVector& p) {
    cfg.validate();
    const int m = model.geom().num_voxels();
    const bool kernelized = cfg.algorithm != Algorithm::mlem && cfg.algorithm != Algorithm::mlem_f;
    if (kernelized && !kernel)
        throw std::invalid_argument("run: kernel matrix required for this algorithm");

    const bool regularized = cfg.algorithm == Algorithm::krem || cfg.algorithm == Algorithm::mkrem;
    const double beta1 = regularized ? cfg.beta1 : 0.0;
    const double beta2 = regularized ? cfg.beta2 : 0.0;
    if (beta1 > 0.0 && !dict)
        throw std::invalid_argument("run: beta1 > 0 requires a dictionary pack");
    if (beta2 > 0.0 && !lap)
        throw std::invalid_argument("run: beta2 > 0 requires a Laplacian pack");

    const DenseVector sens = model.sensitivity();
    const DenseVector denom_base = kernelized ? matvec_transpose(*kernel, sens) : sens;
    const double floor = cfg.denom_floor > 0.0 ? cfg.denom_floor : auto_floor(denom_base);
    const bool filtered = cfg.algorithm == Algorithm::mlem_f;

    ReconResult result;
    const auto snapshot = [&](const DenseVector& x) {
        return filtered ? gaussian_postfilter(x, model.geom().image_width,
                                              model.geom().image_height, cfg.filter_window,
                                              cfg.filter_sigma)
                        : x;
    };

    DenseVector a = ones(static_cast<std::size_t>(m));
    DenseVector x;
    for (int iter = 1; iter <= cfg.n_iters; ++iter) {
        if (!kernelized) {
            a = mlem_step(model, a, nullptr, p, floor, cfg.ratio_floor, &sens);
            x = a;
        } else {
            DenseVector dict_field;
            const DenseVector* dict_field_ptr = nullptr;
            if (beta1 > 0.0) {
                dict_field = code_coefficients(dict->atoms, a, dict->op, dict->sparsity);
                dict_field_ptr = &dict_field;
            }
            a = mkrem_step(model, *kernel, a, p, dict_field_ptr, lap, beta1, beta2, floor,
                           cfg.ratio_floor, &sens, cfg.grad_outside_kt);
            x = matvec(*kernel, a);
        }
        if (iter % cfg.record_every == 0) {
            result.iterations.push_back(iter);
            result.images.push_back(snapshot(x));
        }
    }
    result.final_image = snapshot(x);
    result.final_coefficients = std::move(a);
    return result;
}

}  // namespace mkrem
