#pragma once

#include <string>

namespace shortmr {

// Binary protected groups: group 0 = female / Black, group 1 = male / White.
enum class Sex { female = 0, male = 1 };
enum class Race { black = 0, white = 1 };
enum class Diagnosis { cn = 0, ad = 1 };
enum class Attribute { sex, race };

std::string to_string(Sex s);
std::string to_string(Race r);
std::string to_string(Diagnosis d);
std::string to_string(Attribute a);
Sex sex_from_string(const std::string& s);
Race race_from_string(const std::string& s);
Diagnosis diagnosis_from_string(const std::string& s);
Attribute attribute_from_string(const std::string& s);

}  // namespace shortmr
