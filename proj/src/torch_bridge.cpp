#include "legopet/torch_bridge.hpp"

#include "legopet/errors.hpp"
#include "legopet/unet.hpp"

namespace legopet {

torch::Tensor to_tensor(const Array2D& a, torch::ScalarType dtype) {
    auto t = torch::from_blob(const_cast<double*>(a.data.data()), {a.rows, a.cols},
                              torch::kFloat64);
    return t.to(dtype).clone();
}

Array2D to_array2d(const torch::Tensor& t) {
    auto x = t.squeeze();
    if (x.dim() != 2) throw ShapeError("to_array2d: expected a 2D tensor");
    x = x.to(torch::kFloat64).contiguous();
    Array2D a(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)));
    std::memcpy(a.data.data(), x.data_ptr<double>(), sizeof(double) * a.data.size());
    return a;
}

TensorSplit load_split_tensors(const tomo::DatasetManifest& m, const std::string& split,
                               int image_size) {
    const auto& items = m.split(split);
    if (items.empty()) throw ConfigError("load_split_tensors: split '" + split + "' is empty");
    TensorSplit out;
    std::vector<torch::Tensor> sinos, refs;
    for (const auto& item : items) {
        const auto li = tomo::load_item(m, item);
        sinos.push_back(to_tensor(li.sinogram).unsqueeze(0));
        refs.push_back(to_tensor(li.reference).unsqueeze(0));
        out.item_indices.push_back(item.index);
    }
    out.sino_raw = torch::stack(sinos);
    out.ref01 = torch::stack(refs);
    out.sino = nn::resample_sinogram(out.sino_raw, image_size);
    out.ref_pm1 = out.ref01 * 2.0 - 1.0;
    return out;
}

}  // namespace legopet
