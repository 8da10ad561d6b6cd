#include "aecl/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace aecl::nn {

namespace {

enum class Tag : std::uint8_t { Dense = 1, Conv2D = 2, Conv2DTranspose = 3, MaxPool2D = 4, Activation = 5, Flatten = 6, Crop2D = 7 };

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}

    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    void read(void* dst, std::size_t n) {
        is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw std::runtime_error("checkpoint: truncated file");
    }

private:
    std::istream& is_;
};

std::string encode_layer(const LayerSpec& spec) {
    std::string rec;
    struct Visitor {
        std::string& r;
        void operator()(const Dense& d) const {
            r.push_back(static_cast<char>(Tag::Dense));
            put_i32(r, d.in);
            put_i32(r, d.out);
        }
        void operator()(const Conv2D& c) const {
            r.push_back(static_cast<char>(Tag::Conv2D));
            put_i32(r, c.filters);
        }
        void operator()(const Conv2DTranspose& c) const {
            r.push_back(static_cast<char>(Tag::Conv2DTranspose));
            put_i32(r, c.filters);
        }
        void operator()(const MaxPool2D&) const { r.push_back(static_cast<char>(Tag::MaxPool2D)); }
        void operator()(const Activation& a) const {
            r.push_back(static_cast<char>(Tag::Activation));
            put_i32(r, static_cast<std::int32_t>(a.kind));
        }
        void operator()(const Flatten&) const { r.push_back(static_cast<char>(Tag::Flatten)); }
        void operator()(const Crop2D& c) const {
            r.push_back(static_cast<char>(Tag::Crop2D));
            put_i32(r, c.height);
            put_i32(r, c.width);
        }
    };
    std::visit(Visitor{rec}, spec);
    return rec;
}

LayerSpec decode_layer(const std::string& rec) {
    if (rec.empty()) throw std::runtime_error("checkpoint: empty layer record");
    std::size_t pos = 1;
    auto field = [&]() {
        if (pos + 4 > rec.size()) throw std::runtime_error("checkpoint: short layer record");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(rec[pos + i])) << (8 * i);
        pos += 4;
        return static_cast<std::int32_t>(v);
    };
    LayerSpec spec;
    switch (static_cast<Tag>(rec[0])) {
        case Tag::Dense: {
            const int in = field();
            spec = Dense{in, field()};
            break;
        }
        case Tag::Conv2D:
            spec = Conv2D{field()};
            break;
        case Tag::Conv2DTranspose:
            spec = Conv2DTranspose{field()};
            break;
        case Tag::MaxPool2D:
            spec = MaxPool2D{};
            break;
        case Tag::Activation: {
            const int k = field();
            if (k < 0 || k > static_cast<int>(ActivationKind::Tanh)) throw std::runtime_error("checkpoint: bad activation");
            spec = Activation{static_cast<ActivationKind>(k)};
            break;
        }
        case Tag::Flatten:
            spec = Flatten{};
            break;
        case Tag::Crop2D: {
            const int h = field();
            spec = Crop2D{h, field()};
            break;
        }
        default:
            throw std::runtime_error("checkpoint: unknown layer tag " + std::to_string(static_cast<int>(rec[0])));
    }
    if (pos != rec.size()) throw std::runtime_error("checkpoint: trailing bytes in layer record");
    return spec;
}

}  // namespace

void save_network(std::ostream& os, const Network<float>& net) {
    std::string out(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(net.input_shape().size()));
    for (int d : net.input_shape()) put_i32(out, d);
    put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& spec : net.layers()) {
        const std::string rec = encode_layer(spec);
        put_u32(out, static_cast<std::uint32_t>(rec.size()));
        out += rec;
    }
    for (const auto& p : net.parameters()) {
        for (float v : p.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("checkpoint: write failed");
}

Network<float> load_network(std::istream& is) {
    Reader r(is);
    char magic[4];
    r.read(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad input rank");
    Shape input;
    for (std::uint32_t i = 0; i < rank; ++i) input.push_back(r.i32());
    const std::uint32_t count = r.u32();
    if (count > 4096) throw std::runtime_error("checkpoint: implausible layer count");
    std::vector<LayerSpec> layers;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32();
        if (len > 64) throw std::runtime_error("checkpoint: oversized layer record");
        std::string rec(len, '\0');
        r.read(rec.data(), len);
        layers.push_back(decode_layer(rec));
    }
    Network<float> net(input, std::move(layers), 0);
    for (auto& p : net.mutable_parameters()) {
        for (auto& v : p.data) v = std::bit_cast<float>(r.u32());
    }
    return net;
}

void save_network_file(const std::filesystem::path& path, const Network<float>& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
    save_network(os, net);
}

Network<float> load_network_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
    return load_network(is);
}

}  // namespace aecl::nn
