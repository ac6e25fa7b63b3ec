#pragma once

// Prompt template assets. Paragraphs are separated by one blank line, lines
// use LF, and no template ends with a newline. Stray double spaces inside a
// few sentences are part of the printed wording and are kept as-is.

#include <string>
#include <string_view>

namespace kgtopo::templates {

inline constexpr std::string_view kVersion = "kgtopo-prompts/1";

inline constexpr std::string_view kPreamble =
    "You will receive a triplet with a missing node. Given triplet can be of the form available "
    "node --> relation --> ? or ? --> relation --> available node. Your task is predicting the "
    "missing node. Alongside, you will get a hint about the type of answer that is correct, and "
    "you might receive additional relevant information to aid your prediction. Please respond "
    "only with the missing node, without including the head node or the relation.";

inline constexpr std::string_view kTaskTriplet =
    "Your task:\n"
    "\n"
    "Triplet with missing node:\n"
    "{triplet}";

inline constexpr std::string_view kAnswerInstruction =
    "Please provide a list of 10 candidate nodes for the missing node. Answer should be of the "
    "format ['candidate_node_1', 'candidate_node_2', ......, 'candidate_node_10']. The list of "
    "candidate nodes should be in order of most probably candidate node to least probable "
    "candidate node.";

inline constexpr std::string_view kAnswerTrailer = "Missing candidate nodes:";

inline constexpr std::string_view kTypeHint =
    "Hint about missing node type:\n"
    "The missing node should be of type {type}";

inline constexpr std::string_view kTheTypeHint =
    "Hint about the missing node type:\n"
    "The missing node should be of type {type}";

inline constexpr std::string_view kCandidateHint =
    "Hint about missing node:\n"
    "The missing node should be of type {type}. Potential candidate nodes for the missing node "
    "are {data}. This does not mean that missing node is always in the provided list. It is a "
    "hint to help you predict the missing node.";

inline constexpr std::string_view kReason = "Reason about the missing node using Chain of Thought method.";

inline constexpr std::string_view kKnownType = "Available node {known node} is of node type {type}.";

// Worked John Lennon example shared by the ontology-path variants. The
// `with_type_hint` form carries the missing-type hint before the answer.
inline std::string lennon_type_example(bool with_type_hint) {
  std::string s =
      "Example:\n"
      "\n"
      "Triplet with missing node:\n"
      "John Lennon --> born_in --> ?\n"
      "\n"
      "Available node John Lennon is of node type person.\n"
      "\n"
      "Graph paths that can be important for filling missing information for a triplet type "
      "person --> born_in --> country are [person --> died_in --> country, person --> child_of "
      "--> person --> citizen_of --> country].\n"
      "\n"
      "Chain of thought:\n"
      "This can be a list of questions that might help predict the missing node: [In which "
      "country the person died?, If a person is a child of another person who is a citizen of a "
      "certain country, which country is that?].\n"
      "\n"
      "If John Lennon --> died_in --> United Kingdom, John Lennon --> child_of --> Alfred Lennon "
      "--> citizen_of --> United Kingdom\n"
      "then it is likely that\n"
      "John Lennon --> born_in  --> United Kingdom\n"
      "\n";
  if (with_type_hint) {
    s += "Hint about missing node type:\n"
         "The missing node should be of type country\n"
         "\n";
  }
  s += "Missing node:\n"
       "United Kingdom";
  return s;
}

inline std::string lennon_graph_example() {
  return "Example:\n"
         "\n"
         "Triplet with missing node:\n"
         "John Lennon --> born_in --> ?\n"
         "\n"
         "Available node John Lennon is of node type person.\n"
         "\n"
         "Graph paths that can be important for filling missing information for triplet John "
         "Lennon --> born_in --> ? are [John Lennon --> died_in --> United Kingdom, John Lennon "
         "--> child_of --> Alfred Lennon --> citizen_of --> United Kingdom].\n"
         "\n"
         "Chain of thought:\n"
         "\n"
         "If John Lennon died_in United Kingdom, and John Lennon is a child_of Alfred Lennon who "
         "is a citizen_of United Kingdom\n"
         "then it is likely that\n"
         "John Lennon --> born_in  --> United Kingdom\n"
         "\n"
         "Hint about missing node type:\n"
         "The missing node should be of type country\n"
         "\n"
         "Missing node:\n"
         "United Kingdom";
}

namespace detail {

inline std::string paragraphs(std::initializer_list<std::string_view> parts) {
  std::string out;
  for (std::string_view p : parts) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

}  // namespace detail

inline std::string vanilla() {
  return detail::paragraphs({kPreamble, kTaskTriplet, kAnswerInstruction, kAnswerTrailer});
}

inline std::string ontology() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet, kTypeHint, kAnswerInstruction, kAnswerTrailer});
}

inline std::string ontology_paths() {
  const std::string example = lennon_type_example(false);
  return detail::paragraphs(
      {kPreamble, example, kTaskTriplet, kKnownType,
       "Graph paths that are important for filling missing information for a triplet type  are "
       "{ontology paths}.",
       kReason, kAnswerInstruction, kAnswerTrailer});
}

inline std::string ontology_plus_paths() {
  const std::string example = lennon_type_example(true);
  return detail::paragraphs(
      {kPreamble, example, kTaskTriplet, kKnownType,
       "Graph paths that are important for filling missing information for a triplet type are "
       "{ontology paths}.",
       kReason, kTheTypeHint, kAnswerInstruction, kAnswerTrailer});
}

inline std::string neighbors() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet,
       "1-hop neighbours of the available node {known node} are given along with their relations "
       "as a list:\n"
       "{neighbours}. This does not mean that the missing node is in this list. It is just a hint "
       "to help you predict the missing node.",
       kAnswerInstruction, kAnswerTrailer});
}

inline std::string candidates() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet, kCandidateHint, kAnswerInstruction, kAnswerTrailer});
}

// Printed only as "Candidates with" the type hint; the hint paragraph goes
// right before the answer instruction, where the fully printed graph-paths
// variant places it.
inline std::string candidates_ontology() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet, kCandidateHint, kTheTypeHint, kAnswerInstruction, kAnswerTrailer});
}

inline constexpr std::string_view kOntologyPathsLine =
    "Graph paths that are important for filling missing information for a triplet type are "
    "{ontology paths}.";

inline std::string candidates_ontology_paths() {
  const std::string example = lennon_type_example(true);
  return detail::paragraphs({kPreamble, example, kTaskTriplet, kKnownType, kCandidateHint,
                             kOntologyPathsLine, kReason, kAnswerInstruction, kAnswerTrailer});
}

inline std::string candidates_ontology_paths_hint() {
  const std::string example = lennon_type_example(true);
  return detail::paragraphs({kPreamble, example, kTaskTriplet, kKnownType, kCandidateHint,
                             kOntologyPathsLine, kReason, kTheTypeHint, kAnswerInstruction,
                             kAnswerTrailer});
}

inline std::string candidates_graph_paths() {
  const std::string example = lennon_graph_example();
  return detail::paragraphs(
      {kPreamble, example, kTaskTriplet, kCandidateHint,
       "Graph paths that are important for filling missing information for triplet {triplet} are "
       "{graph paths}.",
       kReason, kTheTypeHint, kAnswerInstruction, kAnswerTrailer});
}

inline std::string ontology_induction() {
  return "I will provide you with a relation and two data pairs. Your task is to determine the "
         "specific ontology node classes for the entities in these data pairs that are connected "
         "by the specified relation.\n"
         "\n"
         "Strict Requirements:\n"
         "1) All node classes must be written in lowercase.\n"
         "2) Connect words within node classes using underscores.\n"
         "3) The relation provided must not be altered in your response.\n"
         "4) Provide a single response for all data pairs, formatted as follows: ['head node "
         "class', 'tail node class', 'relation'].\n"
         "5) Ensure your answer strictly adheres to this format: ['head node class', 'tail node "
         "class', 'relation']. Do not include any additional text or explanation.\n"
         "\n"
         "Soft Requirements:\n"
         "1) Refer to the existing node classes: {ontology_categories}. You may reuse these if "
         "they accurately describe the data pairs. If not, provide a more suitable "
         "classification.\n"
         "2) Avoid using generic terms like 'person'. Instead, use more specific classifications "
         "such as 'film_producer' or 'play_writer' where applicable.\n"
         "\n"
         "Example 1:\n"
         "Relation: 'was born in'\n"
         "Data Pairs: ['(John Lennon, United Kingdom)', '(Miles Davis, United States)']\n"
         "Answer:\n"
         "['musician', 'country', 'was born in']\n"
         "\n"
         "Example 2:\n"
         "Relation: 'directed by'\n"
         "Data Pairs: ['(Inception, Christopher Nolan)', '(Titanic, James Cameron)']\n"
         "Answer:\n"
         "['film', 'film_director', 'directed by']\n"
         "\n"
         "Your turn:\n"
         "Relation: '{relation}'\n"
         "Data Pairs: '{data_pairs}'\n"
         "Answer:";
}

// Tournament rounds: the Candidates template with the 10-candidate answer
// instruction swapped for a selection instruction.
inline constexpr std::string_view kSingleWinnerInstruction =
    "Please respond only with the single most likely candidate node from the provided list.";

inline constexpr std::string_view kMultiWinnerInstruction =
    "Please respond only with the {winners} most likely candidate nodes from the provided list. "
    "Answer should be of the format ['candidate_node_1', 'candidate_node_2', ......]. The list "
    "of candidate nodes should be in order of most probably candidate node to least probable "
    "candidate node.";

inline std::string tournament_single() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet, kCandidateHint, kSingleWinnerInstruction, kAnswerTrailer});
}

inline std::string tournament_multi() {
  return detail::paragraphs(
      {kPreamble, kTaskTriplet, kCandidateHint, kMultiWinnerInstruction, kAnswerTrailer});
}

}  // namespace kgtopo::templates
