#pragma once

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "squall/model.hpp"
#include "squall/value_traits.hpp"

namespace squall {

// Transition-enumeration text format, one file pair per model.
//
//   .tra    STATES n
//           TRANSITIONS m
//           src dst value              (dtmc, ctmc; value = probability / rate)
//           src choice dst value       (mdp, ma)
//           src choice dst value ! E   (ma Markovian choice; E = exit rate)
//
//   .lab    #DECLARATION
//           name…
//           #END
//           state name…
//
// `//` starts a comment anywhere; blank lines are ignored. Writers emit
// states, choices, and columns in ascending order, doubles with 17
// significant digits, and rationals as `p/q`.

namespace detail {

struct TextLine {
    std::size_t number;
    std::vector<std::string> tokens;
};

inline std::vector<TextLine> split_lines(std::string const& text) {
    std::vector<TextLine> result;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        auto comment = line.find("//");
        if (comment != std::string::npos) line.erase(comment);
        std::istringstream words(line);
        TextLine entry{number, {}};
        std::string token;
        while (words >> token) entry.tokens.push_back(std::move(token));
        if (!entry.tokens.empty()) result.push_back(std::move(entry));
    }
    return result;
}

[[noreturn]] inline void fail_line(std::size_t line, std::string const& message) {
    throw InputError("line " + std::to_string(line) + ": " + message);
}

inline index_t parse_state_index(std::string const& token, index_t num_states, std::size_t line) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
        fail_line(line, "expected a state index, got '" + token + "'");
    unsigned long long value = std::stoull(token);
    if (value >= static_cast<unsigned long long>(num_states))
        fail_line(line, "dangling state index " + token + " (the file declares " +
                            std::to_string(num_states) + " states)");
    return static_cast<index_t>(value);
}

inline index_t parse_choice_index(std::string const& token, std::size_t line) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
        fail_line(line, "expected a choice index, got '" + token + "'");
    return static_cast<index_t>(std::stoull(token));
}

inline index_t parse_header(std::vector<TextLine> const& lines, std::size_t position,
                            std::string const& keyword) {
    if (position >= lines.size()) throw InputError("missing " + keyword + " header");
    auto const& line = lines[position];
    if (line.tokens.size() != 2 || line.tokens[0] != keyword)
        fail_line(line.number, "expected '" + keyword + " <count>'");
    auto const& token = line.tokens[1];
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
        fail_line(line.number, "malformed count '" + token + "'");
    return static_cast<index_t>(std::stoull(token));
}

}  // namespace detail

/// Reads a model of the given kind from the text of a .tra/.lab file pair.
template <typename V>
Model<V> read_explicit(std::string const& tra_text, std::string const& lab_text, ModelKind kind) {
    using detail::fail_line;
    auto lines = detail::split_lines(tra_text);
    index_t num_states = detail::parse_header(lines, 0, "STATES");
    index_t declared_transitions = detail::parse_header(lines, 1, "TRANSITIONS");
    bool const grouped = is_nondeterministic(kind);

    // Collect entries per (state, choice); deterministic kinds use choice 0.
    std::map<std::pair<index_t, index_t>, std::map<index_t, V>> rows;
    std::map<index_t, std::pair<index_t, V>> markovian;  // state -> (choice, exit rate)
    index_t total_entries = 0;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        auto const& [number, tokens] = lines[i];
        std::size_t const plain = grouped ? 4 : 3;
        bool markovian_line = false;
        if (kind == ModelKind::Ma && tokens.size() == 6 && tokens[4] == "!")
            markovian_line = true;
        else if (tokens.size() != plain)
            fail_line(number, grouped ? "expected 'src choice dst value'"
                                      : "expected 'src dst value'");

        index_t src = detail::parse_state_index(tokens[0], num_states, number);
        index_t choice = grouped ? detail::parse_choice_index(tokens[1], number) : 0;
        index_t dst = detail::parse_state_index(tokens[grouped ? 2 : 1], num_states, number);
        V value;
        try {
            value = ValueTraits<V>::from_string(tokens[grouped ? 3 : 2]);
        } catch (InputError const& e) {
            fail_line(number, e.what());
        }
        if (value < ValueTraits<V>::zero())
            fail_line(number, "negative transition value");

        auto& row = rows[{src, choice}];
        if (!row.emplace(dst, value).second)
            fail_line(number, "duplicate transition " + tokens[0] + " -> " +
                                  std::to_string(dst) +
                                  (grouped ? " in choice " + std::to_string(choice) : ""));
        ++total_entries;

        if (markovian_line) {
            V rate;
            try {
                rate = ValueTraits<V>::from_string(tokens[5]);
            } catch (InputError const& e) {
                fail_line(number, e.what());
            }
            if (!(rate > ValueTraits<V>::zero()))
                fail_line(number, "a Markovian choice needs a positive exit rate");
            auto [it, inserted] = markovian.emplace(src, std::make_pair(choice, rate));
            if (!inserted && (it->second.first != choice || it->second.second != rate))
                fail_line(number, "state " + tokens[0] +
                                      " has inconsistent Markovian choice annotations");
        }
    }
    if (total_entries != declared_transitions)
        throw InputError("TRANSITIONS header declares " + std::to_string(declared_transitions) +
                         " entries but the file holds " + std::to_string(total_entries));

    // Assemble rows in (state, choice) order.
    std::vector<index_t> row_offsets{0}, group_offsets{0}, col_indices;
    std::vector<V> values, exit_rates;
    std::vector<index_t> markovian_states_list;
    auto it = rows.begin();
    for (index_t s = 0; s < num_states; ++s) {
        index_t rows_here = 0;
        while (it != rows.end() && it->first.first == s) {
            V sum = ValueTraits<V>::zero();
            for (auto const& [dst, value] : it->second) {
                col_indices.push_back(dst);
                values.push_back(value);
                sum += value;
            }
            bool const rate_row = kind == ModelKind::Ctmc;
            if (!rate_row) {
                bool ok = ValueTraits<V>::is_exact
                              ? sum == ValueTraits<V>::one()
                              : ValueTraits<V>::abs(sum - ValueTraits<V>::one()) <= 1e-8;
                if (!ok)
                    throw InputError("row sum " + ValueTraits<V>::to_string(sum) +
                                     " differs from one at state " + std::to_string(s));
            }
            if (rate_row && rows_here == 0) exit_rates.push_back(sum);
            row_offsets.push_back(static_cast<index_t>(col_indices.size()));
            ++rows_here;
            ++it;
        }
        if (rows_here == 0)
            throw InputError("state " + std::to_string(s) + " has no transitions");
        if (!grouped && rows_here > 1)
            throw InputError("state " + std::to_string(s) + " has several rows but " +
                             to_string(kind) + " models are deterministic");
        group_offsets.push_back(static_cast<index_t>(row_offsets.size()) - 1);

        if (kind == ModelKind::Ma) {
            auto m = markovian.find(s);
            if (m != markovian.end()) {
                if (rows_here != 1)
                    throw InputError("state " + std::to_string(s) +
                                     " mixes Markovian and probabilistic choices");
                markovian_states_list.push_back(s);
                exit_rates.push_back(m->second.second);
            } else {
                exit_rates.push_back(ValueTraits<V>::zero());
            }
        }
    }

    Model<V> model;
    model.kind = kind;
    index_t num_rows = static_cast<index_t>(row_offsets.size()) - 1;
    model.matrix = SparseMatrix<V>(num_rows, num_states, std::move(row_offsets),
                                   std::move(col_indices), std::move(values));
    model.grouping.group_offsets = std::move(group_offsets);
    model.exit_rates = std::move(exit_rates);

    // Labels.
    model.labeling = StateLabeling(num_states);
    auto lab_lines = detail::split_lines(lab_text);
    std::size_t position = 0;
    if (lab_lines.empty() || lab_lines[0].tokens[0] != "#DECLARATION")
        throw InputError("label text must open with #DECLARATION");
    std::vector<std::string> declared;
    bool closed = false;
    std::size_t token_index = 1;
    while (position < lab_lines.size() && !closed) {
        auto const& tokens = lab_lines[position].tokens;
        for (; token_index < tokens.size(); ++token_index) {
            if (tokens[token_index] == "#END") {
                closed = true;
                if (token_index + 1 != tokens.size())
                    fail_line(lab_lines[position].number, "#END must close its line");
                break;
            }
            declared.push_back(tokens[token_index]);
        }
        token_index = 0;
        ++position;
    }
    if (!closed) throw InputError("label declaration is missing #END");
    for (auto const& name : declared)
        if (!model.labeling.has_label(name)) model.labeling.add_label(name, Bitset(num_states));
    for (; position < lab_lines.size(); ++position) {
        auto const& [number, tokens] = lab_lines[position];
        index_t state = detail::parse_state_index(tokens[0], num_states, number);
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            bool known = tokens[i] == "init" || tokens[i] == "deadlock";
            for (auto const& name : declared) known = known || name == tokens[i];
            if (!known) fail_line(number, "label '" + tokens[i] + "' was not declared");
            model.labeling.add_to_label(tokens[i], state);
        }
    }

    if (kind == ModelKind::Ma) {
        model.markovian_states = Bitset(num_states);
        for (index_t s : markovian_states_list) model.markovian_states.set(s);
    }
    model.validate(1e-8);
    return model;
}

/// Writes a model as a .tra/.lab text pair in canonical form.
template <typename V>
std::pair<std::string, std::string> write_explicit(Model<V> const& model) {
    std::ostringstream tra;
    tra << "STATES " << model.num_states() << "\n";
    tra << "TRANSITIONS " << model.matrix.num_entries() << "\n";
    bool const grouped = is_nondeterministic(model.kind);
    for (index_t s = 0; s < model.num_states(); ++s) {
        for (index_t row = model.grouping.group_begin(s); row < model.grouping.group_end(s);
             ++row) {
            bool const markovian_row =
                model.kind == ModelKind::Ma && model.markovian_states.get(s);
            for (index_t e = model.matrix.row_begin(row); e < model.matrix.row_end(row); ++e) {
                tra << s << " ";
                if (grouped) tra << row - model.grouping.group_begin(s) << " ";
                tra << model.matrix.col(e) << " "
                    << ValueTraits<V>::to_string(model.matrix.value(e));
                if (markovian_row)
                    tra << " ! " << ValueTraits<V>::to_string(model.exit_rates[s]);
                tra << "\n";
            }
        }
    }

    std::ostringstream lab;
    lab << "#DECLARATION\n";
    bool first = true;
    for (auto const& [name, states] : model.labeling.all()) {
        (void)states;
        lab << (first ? "" : " ") << name;
        first = false;
    }
    if (!first) lab << "\n";
    lab << "#END\n";
    for (index_t s = 0; s < model.num_states(); ++s) {
        std::string line;
        for (auto const& [name, states] : model.labeling.all())
            if (states.get(s)) line += " " + name;
        if (!line.empty()) lab << s << line << "\n";
    }
    return {tra.str(), lab.str()};
}

}  // namespace squall
