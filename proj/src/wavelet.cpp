#include "legopet/wavelet.hpp"

#include "legopet/errors.hpp"

namespace legopet::wavelet {

using torch::indexing::None;
using torch::indexing::Slice;

namespace {

void check_even(const torch::Tensor& t, const char* where) {
    if (t.dim() < 2) throw ShapeError(std::string(where) + ": need at least 2 dims");
    const auto h = t.size(-2), w = t.size(-1);
    if (h % 2 || w % 2)
        throw ShapeError(std::string(where) + ": H and W must be even, got " + std::to_string(h) +
                         "x" + std::to_string(w));
}

}  // namespace

SubbandSet dwt2(const torch::Tensor& image) {
    check_even(image, "dwt2");
    const auto a = image.index({torch::indexing::Ellipsis, Slice(0, None, 2), Slice(0, None, 2)});
    const auto b = image.index({torch::indexing::Ellipsis, Slice(0, None, 2), Slice(1, None, 2)});
    const auto c = image.index({torch::indexing::Ellipsis, Slice(1, None, 2), Slice(0, None, 2)});
    const auto d = image.index({torch::indexing::Ellipsis, Slice(1, None, 2), Slice(1, None, 2)});
    SubbandSet s;
    s.ll = (a + b + c + d) * 0.5;
    s.lh = (a - b + c - d) * 0.5;
    s.hl = (a + b - c - d) * 0.5;
    s.hh = (a - b - c + d) * 0.5;
    return s;
}

torch::Tensor idwt2(const SubbandSet& sub) {
    const auto& ll = sub.ll;
    if (!ll.defined()) throw ShapeError("idwt2: empty SubbandSet");
    for (const auto* t : {&sub.lh, &sub.hl, &sub.hh})
        if (t->sizes() != ll.sizes()) throw ShapeError("idwt2: subband shapes disagree");

    const auto a = (sub.ll + sub.lh + sub.hl + sub.hh) * 0.5;
    const auto b = (sub.ll - sub.lh + sub.hl - sub.hh) * 0.5;
    const auto c = (sub.ll + sub.lh - sub.hl - sub.hh) * 0.5;
    const auto d = (sub.ll - sub.lh - sub.hl + sub.hh) * 0.5;

    auto shape = ll.sizes().vec();
    shape[shape.size() - 2] *= 2;
    shape[shape.size() - 1] *= 2;
    auto out = torch::empty(shape, ll.options());
    out.index_put_({torch::indexing::Ellipsis, Slice(0, None, 2), Slice(0, None, 2)}, a);
    out.index_put_({torch::indexing::Ellipsis, Slice(0, None, 2), Slice(1, None, 2)}, b);
    out.index_put_({torch::indexing::Ellipsis, Slice(1, None, 2), Slice(0, None, 2)}, c);
    out.index_put_({torch::indexing::Ellipsis, Slice(1, None, 2), Slice(1, None, 2)}, d);
    return out;
}

torch::Tensor dwt_loss(const torch::Tensor& pred, const torch::Tensor& target, bool include_ll) {
    if (pred.sizes() != target.sizes()) throw ShapeError("dwt_loss: shape mismatch");
    const SubbandSet p = dwt2(pred);
    const SubbandSet t = dwt2(target);
    // mean over the concatenation of the selected subbands
    auto sq = [](const torch::Tensor& x, const torch::Tensor& y) { return (x - y).pow(2); };
    auto acc = sq(p.lh, t.lh) + sq(p.hl, t.hl) + sq(p.hh, t.hh);
    if (include_ll) return (acc + sq(p.ll, t.ll)).mean() / 4.0;
    return acc.mean() / 3.0;
}

}  // namespace legopet::wavelet
