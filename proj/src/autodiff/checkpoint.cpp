#include "grasp/autodiff/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace grasp::ad {

namespace {

constexpr std::array<char, 4> magic{'G', 'R', 'S', 'P'};

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((value >> (8 * i)) & 0xffu));
}

template <class T>
T get_le(std::istream& is) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = is.get();
        if (c == EOF) throw std::runtime_error("checkpoint truncated");
        value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    os.write(magic.data(), magic.size());
    put_le<std::uint32_t>(os, checkpoint_version);
    for (const auto& [name, t] : tensors) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) put_le<std::uint64_t>(os, d);
        for (double x : t.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
    }
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::array<char, 4> head{};
    is.read(head.data(), head.size());
    if (!is || head != magic) throw std::runtime_error("not a GRSP checkpoint: " + path.string());
    const auto version = get_le<std::uint32_t>(is);
    if (version != checkpoint_version) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    NamedTensors out;
    while (is.peek() != EOF) {
        const auto name_len = get_le<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("checkpoint truncated in tensor name");
        const auto rank = get_le<std::uint32_t>(is);
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
        std::vector<double> data(shape_size(shape));
        for (double& x : data) x = std::bit_cast<double>(get_le<std::uint64_t>(is));
        out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return out;
}

NamedTensors snapshot(const ParamList& params) {
    NamedTensors out;
    for (const Parameter* p : params) {
        if (!out.emplace(p->name, p->value).second) throw std::logic_error("duplicate parameter name " + p->name);
    }
    return out;
}

void restore(const NamedTensors& tensors, const ParamList& params) {
    for (Parameter* p : params) {
        auto it = tensors.find(p->name);
        if (it == tensors.end()) throw std::runtime_error("checkpoint lacks parameter " + p->name);
        if (it->second.shape() != p->value.shape()) {
            throw ShapeError("checkpoint shape " + shape_string(it->second.shape()) + " for " + p->name +
                             " differs from model shape " + shape_string(p->value.shape()));
        }
        p->value = it->second;
    }
}

}  // namespace grasp::ad
