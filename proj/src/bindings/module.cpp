// SPDX-License-Identifier: Apache-2.0
// Python bindings for the main simulator operations.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "scomcp/runner.hpp"

namespace py = pybind11;
using namespace scomcp;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

nn::Tensor tensor_from_array(const DArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    nn::Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::memcpy(t.data(), a.data(), sizeof(double) * t.size());
    return t;
}

py::array_t<double> array_from_tensor(const nn::Tensor& t) {
    py::array_t<double> a({t.rows(), t.cols()});
    std::memcpy(a.mutable_data(), t.data(), sizeof(double) * t.size());
    return a;
}

channel::CVec cvec_from_array(const py::array_t<std::complex<double>>& a) {
    channel::CVec v(a.size());
    std::memcpy(v.data(), a.data(), sizeof(std::complex<double>) * v.size());
    return v;
}

py::array_t<std::complex<double>> array_from_cvec(const channel::CVec& v) {
    py::array_t<std::complex<double>> a(static_cast<py::ssize_t>(v.size()));
    std::memcpy(a.mutable_data(), v.data(), sizeof(std::complex<double>) * v.size());
    return a;
}

classic::Bits bits_from_array(const U8Array& a) {
    return classic::Bits(a.data(), a.data() + a.size());
}

py::array_t<uint8_t> array_from_bits(const classic::Bits& b) {
    py::array_t<uint8_t> a(static_cast<py::ssize_t>(b.size()));
    std::memcpy(a.mutable_data(), b.data(), b.size());
    return a;
}

scenes::PointCloud cloud_from_array(const DArray& a, const std::string& frame) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw std::invalid_argument("points must be [N,3]");
    scenes::PointCloud pc;
    pc.frame = frame;
    pc.points.resize(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) pc.points[i] = {a.at(i, 0), a.at(i, 1), a.at(i, 2)};
    return pc;
}

py::array_t<double> array_from_cloud(const scenes::PointCloud& pc) {
    py::array_t<double> a({static_cast<py::ssize_t>(pc.points.size()), static_cast<py::ssize_t>(3)});
    for (size_t i = 0; i < pc.points.size(); ++i)
        for (int j = 0; j < 3; ++j) a.mutable_at(static_cast<py::ssize_t>(i), j) = pc.points[i][j];
    return a;
}

py::array_t<double> boxes_array(const std::vector<Box7>& boxes) {
    py::array_t<double> a({static_cast<py::ssize_t>(boxes.size()), static_cast<py::ssize_t>(7)});
    for (size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const double row[7] = {b.cx, b.cy, b.cz, b.w, b.l, b.h, b.yaw};
        for (int j = 0; j < 7; ++j) a.mutable_at(static_cast<py::ssize_t>(i), j) = row[j];
    }
    return a;
}

std::vector<Box7> boxes_from_array(const DArray& a) {
    if (a.ndim() != 2 || a.shape(1) != 7) throw std::invalid_argument("boxes must be [N,7]");
    std::vector<Box7> out(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        out[i] = Box7{a.at(i, 0), a.at(i, 1), a.at(i, 2), a.at(i, 3), a.at(i, 4), a.at(i, 5), a.at(i, 6)};
    return out;
}

Box7 box_from_vec(const std::vector<double>& v) {
    return Box7{v.at(0), v.at(1), v.at(2), v.at(3), v.at(4), v.at(5), v.at(6)};
}

// End-to-end single-scene inference around a checkpointed model.
class Pipeline {
public:
    explicit Pipeline(const std::string& ckpt_path) : model_(Model::load(ckpt_path)) {}
    explicit Pipeline(uint64_t seed) : model_(Model::init(ModelConfig{}, seed)) {
        model_.trained_stage = 3;
    }

    double gamma_thr() const { return model_.gamma_thr; }
    py::tuple grid() const {
        return py::make_tuple(model_.cfg.grid.H, model_.cfg.grid.W, model_.cfg.grid.C);
    }

    py::array_t<std::complex<double>> encode_tokens(const DArray& F) {
        const auto z = codec::encode(nn::constant(tensor_from_array(F)), model_.cod, model_.cfg.p_bound);
        return array_from_cvec(codec::to_complex(z->val));
    }

    py::array_t<double> decode_tokens(const py::array_t<std::complex<double>>& z) {
        if (z.ndim() != 2) throw std::invalid_argument("symbols must be [K,C]");
        const auto cv = cvec_from_array(z);
        const int K = static_cast<int>(z.shape(0));
        const int C = static_cast<int>(z.shape(1));
        const auto f = codec::decode_tokens(nn::constant(codec::from_complex(cv, K, C)), model_.cod);
        return array_from_tensor(f->val);
    }

    py::tuple detect(const DArray& ego_points, const DArray& collab_points,
                     const std::vector<double>& ego_pose, const std::vector<double>& collab_pose,
                     const std::string& scheme, const std::string& channel_kind, double snr_db,
                     uint64_t seed) {
        dataset::SceneRecord rec;
        rec.scene.ego_pose = {ego_pose.at(0), ego_pose.at(1), ego_pose.at(2)};
        rec.scene.collab_pose = {collab_pose.at(0), collab_pose.at(1), collab_pose.at(2)};
        rec.ego_cloud = cloud_from_array(ego_points, "ego");
        rec.collab_cloud = cloud_from_array(collab_points, "collab");

        training::TrainConfig tc;
        auto ds = runner::prepare({rec}, model_, tc);
        runner::cache_features(model_, ds);
        runner::cache_probs(model_, ds);

        channel::ChannelConfig ch;
        ch.kind = channel::kind_from_string(channel_kind);
        ch.snr_db = snr_db;
        ch.seed = seed;
        config::EvalConfig ecfg;
        const auto det =
            runner::run_scene_scheme(model_, ds.scenes[0], scheme, ch, ecfg, model_.gamma_thr);
        py::array_t<double> scores(static_cast<py::ssize_t>(det.scores.size()));
        for (size_t i = 0; i < det.scores.size(); ++i)
            scores.mutable_at(static_cast<py::ssize_t>(i)) = det.scores[i];
        return py::make_tuple(boxes_array(det.boxes), scores);
    }

private:
    Model model_;
};

}  // namespace

PYBIND11_MODULE(_scomcp, m) {
    m.doc() = "task-oriented semantic communication for V2V collaborative perception";
    m.attr("__version__") = "0.1.0";

    // ---- scenes ----
    py::class_<scenes::SceneConfig>(m, "SceneConfig")
        .def(py::init<>())
        .def_readwrite("world_x", &scenes::SceneConfig::world_x)
        .def_readwrite("world_y", &scenes::SceneConfig::world_y)
        .def_readwrite("min_objects", &scenes::SceneConfig::min_objects)
        .def_readwrite("max_objects", &scenes::SceneConfig::max_objects)
        .def_readwrite("min_gap", &scenes::SceneConfig::min_gap)
        .def_readwrite("occlusion_prob", &scenes::SceneConfig::occlusion_prob);

    py::class_<scenes::SensorConfig>(m, "SensorConfig")
        .def(py::init<>())
        .def_readwrite("max_range", &scenes::SensorConfig::max_range)
        .def_readwrite("angular_res_deg", &scenes::SensorConfig::angular_res_deg)
        .def_readwrite("noise_std", &scenes::SensorConfig::noise_std)
        .def_readwrite("seed", &scenes::SensorConfig::seed);

    py::class_<scenes::Scene>(m, "Scene")
        .def_property_readonly("objects",
                               [](const scenes::Scene& s) { return boxes_array(s.objects); })
        .def_property_readonly("ego_pose",
                               [](const scenes::Scene& s) {
                                   return py::make_tuple(s.ego_pose.x, s.ego_pose.y, s.ego_pose.yaw);
                               })
        .def_property_readonly("collab_pose", [](const scenes::Scene& s) {
            return py::make_tuple(s.collab_pose.x, s.collab_pose.y, s.collab_pose.yaw);
        });

    m.def("generate_scene", &scenes::generate_scene, py::arg("cfg"), py::arg("seed"));
    m.def(
        "render_view",
        [](const scenes::Scene& s, const std::vector<double>& pose, const std::string& frame,
           const scenes::SensorConfig& sensor) {
            return array_from_cloud(
                scenes::render_view(s, {pose.at(0), pose.at(1), pose.at(2)}, frame, sensor));
        },
        py::arg("scene"), py::arg("agent_pose"), py::arg("frame"), py::arg("sensor"));
    m.def(
        "project_points",
        [](const DArray& pts, const std::string& from_tag, const std::vector<double>& from_pose,
           const std::string& to_tag, const std::vector<double>& to_pose) {
            const auto pc = cloud_from_array(pts, from_tag);
            return array_from_cloud(scenes::project_points(
                pc, from_tag, {from_pose.at(0), from_pose.at(1), from_pose.at(2)}, to_tag,
                {to_pose.at(0), to_pose.at(1), to_pose.at(2)}));
        },
        py::arg("points"), py::arg("from_tag"), py::arg("from_pose"), py::arg("to_tag"),
        py::arg("to_pose"));

    // ---- channel ----
    m.def("snr_to_sigma2", &channel::snr_to_sigma2, py::arg("snr_db"), py::arg("p_z") = 1.0);
    m.def(
        "awgn",
        [](const py::array_t<std::complex<double>>& z, double snr_db, uint64_t seed) {
            return array_from_cvec(channel::awgn(cvec_from_array(z), snr_db, seed));
        },
        py::arg("z"), py::arg("snr_db"), py::arg("seed"));
    m.def(
        "rayleigh",
        [](const py::array_t<std::complex<double>>& z, double snr_db, uint64_t seed, bool equalize) {
            return array_from_cvec(channel::rayleigh(cvec_from_array(z), snr_db, seed, equalize));
        },
        py::arg("z"), py::arg("snr_db"), py::arg("seed"), py::arg("equalize") = true);

    // ---- classic chain ----
    m.def("quantize8", [](const DArray& F) {
        auto [codes, spec] = classic::quantize8(tensor_from_array(F));
        py::array_t<uint8_t> arr(static_cast<py::ssize_t>(codes.size()));
        std::memcpy(arr.mutable_data(), codes.data(), codes.size());
        return py::make_tuple(arr, py::make_tuple(spec.min_v, spec.max_v));
    });
    m.def("dequantize8", [](const U8Array& codes, const std::pair<double, double>& spec, int rows,
                            int cols) {
        classic::QuantSpec qs;
        qs.min_v = spec.first;
        qs.max_v = spec.second;
        std::vector<uint8_t> v(codes.data(), codes.data() + codes.size());
        return array_from_tensor(classic::dequantize8(v, qs, rows, cols));
    });
    m.def(
        "fec_encode",
        [](const U8Array& bits, int block_bits) {
            classic::ConvCodec cc(block_bits);
            return array_from_bits(cc.encode(bits_from_array(bits)));
        },
        py::arg("bits"), py::arg("block_bits") = 500);
    m.def(
        "fec_decode",
        [](const U8Array& coded, int block_bits) {
            classic::ConvCodec cc(block_bits);
            return array_from_bits(cc.decode(bits_from_array(coded)));
        },
        py::arg("coded"), py::arg("block_bits") = 500);
    m.def(
        "qam_modulate",
        [](const U8Array& bits, int mod_order) {
            return array_from_cvec(classic::qam_modulate(bits_from_array(bits), mod_order));
        },
        py::arg("bits"), py::arg("mod_order") = 16);
    m.def(
        "qam_demodulate",
        [](const py::array_t<std::complex<double>>& symbols, int mod_order) {
            return array_from_bits(classic::qam_demodulate(cvec_from_array(symbols), mod_order));
        },
        py::arg("symbols"), py::arg("mod_order") = 16);
    m.def("qam16_gray_ber", &classic::qam16_gray_ber, py::arg("esn0_linear"));
    m.def("channel_uses", &classic::channel_uses, py::arg("s_m"), py::arg("cr"), py::arg("r_c"),
          py::arg("m_c"));
    m.def(
        "transmit_classic",
        [](const DArray& F, int mod_order, const std::string& channel_kind, double snr_db,
           uint64_t seed, bool equalize) {
            classic::ClassicConfig ccfg;
            ccfg.mod_order = mod_order;
            channel::ChannelConfig ch;
            ch.kind = channel::kind_from_string(channel_kind);
            ch.snr_db = snr_db;
            ch.seed = seed;
            ch.equalize = equalize;
            return array_from_tensor(classic::transmit_classic(tensor_from_array(F), ccfg, ch));
        },
        py::arg("F"), py::arg("mod_order") = 16, py::arg("channel") = "awgn",
        py::arg("snr_db") = 10.0, py::arg("seed") = 0, py::arg("equalize") = true);

    // ---- evaluation ----
    m.def(
        "rotated_iou",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return rotated_iou(box_from_vec(a), box_from_vec(b));
        },
        py::arg("box_a"), py::arg("box_b"));
    m.def(
        "average_precision",
        [](const std::vector<py::tuple>& preds, const std::vector<DArray>& gts, double iou_thr) {
            std::vector<perception::Detection> dets;
            std::vector<scenes::BoxSet> gt_sets;
            for (const auto& p : preds) {
                perception::Detection d;
                d.boxes = boxes_from_array(p[0].cast<DArray>());
                const auto scores = p[1].cast<DArray>();
                d.scores.assign(scores.data(), scores.data() + scores.size());
                dets.push_back(std::move(d));
            }
            for (const auto& g : gts) gt_sets.push_back(boxes_from_array(g));
            return evaluation::average_precision(dets, gt_sets, iou_thr);
        },
        py::arg("preds"), py::arg("gts"), py::arg("iou_thr"));
    m.def("compression_ratio", [](const U8Array& mask) {
        std::vector<uint8_t> v(mask.data(), mask.data() + mask.size());
        return evaluation::compression_ratio(v);
    });

    // ---- losses ----
    m.def(
        "focal_loss",
        [](const DArray& logits, const DArray& targets, double alpha, double gamma) {
            return training::focal_loss(nn::constant(tensor_from_array(logits)),
                                        tensor_from_array(targets), alpha, gamma)
                ->val[0];
        },
        py::arg("logits"), py::arg("targets"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);
    m.def(
        "smooth_l1",
        [](const DArray& pred, const DArray& target, const DArray& pos_mask) {
            return training::smooth_l1(nn::constant(tensor_from_array(pred)),
                                       tensor_from_array(target), tensor_from_array(pos_mask))
                ->val[0];
        },
        py::arg("pred"), py::arg("target"), py::arg("pos_mask"));

    // ---- end-to-end pipeline ----
    py::class_<Pipeline>(m, "Pipeline")
        .def(py::init<const std::string&>(), py::arg("ckpt_path"))
        .def(py::init<uint64_t>(), py::arg("seed"))
        .def_property_readonly("gamma_thr", &Pipeline::gamma_thr)
        .def_property_readonly("grid", &Pipeline::grid)
        .def("encode_tokens", &Pipeline::encode_tokens, py::arg("F"))
        .def("decode_tokens", &Pipeline::decode_tokens, py::arg("z"))
        .def("detect", &Pipeline::detect, py::arg("ego_points"), py::arg("collab_points"),
             py::arg("ego_pose"), py::arg("collab_pose"), py::arg("scheme") = "upper_bound",
             py::arg("channel") = "rayleigh", py::arg("snr_db") = 20.0, py::arg("seed") = 0);
}
