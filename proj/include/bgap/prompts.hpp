#pragma once

#include <map>
#include <string>

namespace bgap::prompts {

// Behavior description prompt templates, one per facet. Placeholders use
// {name}; literal braces in the JSON output skeletons are doubled ({{ }})
// and collapse when rendered.
const std::string& requests_facet();
const std::string& responses_facet();
const std::string& context_facet();
const std::string& communication_style_facet();
const std::string& damsl_facet();
const std::string& sgd_facet();

const std::string& goal_classification();

// Conversation generation templates.
const std::string& assistant_system();
const std::string& simulator_system();

// Substitutes {name} from vars, collapses {{ and }}. Unknown single-brace
// spans are left untouched.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& vars);

}  // namespace bgap::prompts
