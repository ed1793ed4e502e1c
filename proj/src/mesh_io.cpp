#include "sphconf/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace sphconf
{

namespace
{

std::string lowercase_extension(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line, const std::string& what)
{
    std::ostringstream msg;
    msg << "parse failure in " << path.string() << " line " << line << ": " << what;
    throw InputError(msg.str());
}

RawMesh pack(const std::vector<std::array<double, 3>>& verts,
             const std::vector<std::array<int, 3>>& tris)
{
    RawMesh raw;
    raw.positions.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i)
        raw.positions.row(i) << verts[i][0], verts[i][1], verts[i][2];
    raw.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t f = 0; f < tris.size(); ++f)
        raw.faces.row(f) << tris[f][0], tris[f][1], tris[f][2];
    return raw;
}

// Next non-empty, non-comment line of an OFF file.
bool next_off_line(std::istream& in, std::string& line, std::size_t& lineno)
{
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

RawMesh read_off(const std::filesystem::path& path, std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    if (!next_off_line(in, line, lineno)) parse_fail(path, lineno, "empty file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") parse_fail(path, lineno, "missing OFF header");
    long nv = -1, nf = -1, ne = 0;
    if (!(header >> nv)) {
        if (!next_off_line(in, line, lineno)) parse_fail(path, lineno, "missing counts");
        std::istringstream counts(line);
        counts >> nv >> nf >> ne;
    } else {
        header >> nf >> ne;
    }
    if (nv <= 0 || nf <= 0) parse_fail(path, lineno, "invalid vertex/face counts");

    std::vector<std::array<double, 3>> verts(static_cast<std::size_t>(nv));
    for (auto& v : verts) {
        if (!next_off_line(in, line, lineno)) parse_fail(path, lineno, "unexpected end of vertex list");
        std::istringstream ls(line);
        if (!(ls >> v[0] >> v[1] >> v[2])) parse_fail(path, lineno, "bad vertex line");
    }
    std::vector<std::array<int, 3>> tris(static_cast<std::size_t>(nf));
    for (auto& t : tris) {
        if (!next_off_line(in, line, lineno)) parse_fail(path, lineno, "unexpected end of face list");
        std::istringstream ls(line);
        int count = 0;
        if (!(ls >> count)) parse_fail(path, lineno, "bad face line");
        if (count != 3) parse_fail(path, lineno, "only triangle faces are supported");
        if (!(ls >> t[0] >> t[1] >> t[2])) parse_fail(path, lineno, "bad face line");
    }
    return pack(verts, tris);
}

RawMesh read_obj(const std::filesystem::path& path, std::istream& in)
{
    std::vector<std::array<double, 3>> verts;
    std::vector<std::array<int, 3>> tris;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            std::array<double, 3> v{};
            if (!(ls >> v[0] >> v[1] >> v[2])) parse_fail(path, lineno, "bad vertex line");
            verts.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ls >> token) {
                // "a", "a/b", "a//c", "a/b/c": only the position index matters.
                const std::string head = token.substr(0, token.find('/'));
                int k = 0;
                try {
                    k = std::stoi(head);
                } catch (const std::exception&) {
                    parse_fail(path, lineno, "bad face index '" + token + "'");
                }
                if (k == 0) parse_fail(path, lineno, "face index 0 is invalid in OBJ");
                idx.push_back(k > 0 ? k - 1 : static_cast<int>(verts.size()) + k);
            }
            if (idx.size() != 3) parse_fail(path, lineno, "only triangle faces are supported");
            tris.push_back({idx[0], idx[1], idx[2]});
        }
    }
    if (verts.empty() || tris.empty()) parse_fail(path, lineno, "no vertices or faces");
    return pack(verts, tris);
}

}  // namespace

RawMesh read_mesh_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mesh file " + path.string());
    const std::string ext = lowercase_extension(path);
    if (ext == ".off") return read_off(path, in);
    if (ext == ".obj") return read_obj(path, in);
    throw InputError("unsupported mesh format '" + ext + "' for " + path.string());
}

TriMesh load_mesh(const std::filesystem::path& path)
{
    RawMesh raw = read_mesh_file(path);
    return TriMesh::from_arrays(std::move(raw.positions), std::move(raw.faces));
}

void save_obj(const std::filesystem::path& path, const Points3d& positions, const Faces& faces)
{
    std::FILE* fp = std::fopen(path.string().c_str(), "w");
    if (!fp) throw InputError("cannot write " + path.string());
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
        std::fprintf(fp, "v %.17g %.17g %.17g\n", positions(i, 0), positions(i, 1), positions(i, 2));
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        std::fprintf(fp, "f %d %d %d\n", faces(f, 0) + 1, faces(f, 1) + 1, faces(f, 2) + 1);
    std::fclose(fp);
}

void save_off(const std::filesystem::path& path, const Points3d& positions, const Faces& faces)
{
    std::FILE* fp = std::fopen(path.string().c_str(), "w");
    if (!fp) throw InputError("cannot write " + path.string());
    std::fprintf(fp, "OFF\n%ld %ld 0\n", static_cast<long>(positions.rows()),
                 static_cast<long>(faces.rows()));
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
        std::fprintf(fp, "%.17g %.17g %.17g\n", positions(i, 0), positions(i, 1), positions(i, 2));
    for (Eigen::Index f = 0; f < faces.rows(); ++f)
        std::fprintf(fp, "3 %d %d %d\n", faces(f, 0), faces(f, 1), faces(f, 2));
    std::fclose(fp);
}

}  // namespace sphconf
