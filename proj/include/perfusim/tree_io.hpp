#ifndef PERFUSIM_TREE_IO_HPP
#define PERFUSIM_TREE_IO_HPP

#include <iosfwd>
#include <string>

#include "perfusim/vascular_tree.hpp"

namespace perfusim::vascular {

/// JSON layout:
///   {"nodes":[{"id":0,"x":[..],"kind":"root"}, ...],
///    "segments":[{"tail":0,"head":1,"l":..,"r":..,"q":..}, ...],
///    "role":"supplying", "q_perf":..}
/// Key order and float formatting are stable, so identical trees serialize
/// to identical bytes.
std::string tree_to_json(const VascularTree& tree);
VascularTree tree_from_json(const std::string& text);

void write_tree_json(const VascularTree& tree, const std::string& path);
VascularTree read_tree_json(const std::string& path);

/// Per-segment table: tail,head,length,radius,flow,pressure_drop,mean_velocity.
void write_tree_csv(const VascularTree& tree, const HemoParams& params, std::ostream& out);
void write_tree_csv(const VascularTree& tree, const HemoParams& params, const std::string& path);

}  // namespace perfusim::vascular

#endif
