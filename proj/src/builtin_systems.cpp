#include <algorithm>

#include "gpv/core.hpp"
#include "gpv/error.hpp"

namespace gpv {

namespace {

ValueSystem schwartz10() {
    return ValueSystem(
        "schwartz10",
        {
            {"Security", "Safety, harmony, and stability of society, of relationships, and of self."},
            {"Conformity", "Restraint of actions and impulses likely to upset or harm others or to violate social expectations or norms."},
            {"Tradition", "Respect for and commitment to the customs and ideas of one's culture or religion."},
            {"Benevolence", "Preserving and enhancing the welfare of the people one is in frequent personal contact with."},
            {"Universalism", "Understanding, appreciation, tolerance, and protection of the welfare of all people and of nature."},
            {"Self-Direction", "Independent thought and action: choosing, creating, exploring."},
            {"Stimulation", "Excitement, novelty, and challenge in life."},
            {"Hedonism", "Pleasure and sensuous gratification for oneself."},
            {"Achievement", "Personal success through demonstrating competence according to social standards."},
            {"Power", "Social status and prestige, control or dominance over people and resources."},
        },
        {
            {"Self-transcendence", {"Universalism", "Benevolence"}},
            {"Conservation", {"Security", "Conformity", "Tradition"}},
            {"Openness to Change", {"Self-Direction", "Stimulation", "Hedonism"}},
            {"Self-enhancement", {"Achievement", "Power"}},
        });
}

ValueSystem schwartz4() {
    return ValueSystem(
        "schwartz4",
        {
            {"Self-transcendence", "Concern for the welfare and interests of others, close and distant (Universalism, Benevolence)."},
            {"Conservation", "Order, self-restriction, preservation of the past, and resistance to change (Security, Conformity, Tradition)."},
            {"Openness to Change", "Independence of thought and action and readiness for new experience (Self-Direction, Stimulation, Hedonism)."},
            {"Self-enhancement", "Pursuit of one's own interests, relative success, and dominance over others (Achievement, Power)."},
        });
}

ValueSystem vsm13() {
    return ValueSystem(
        "vsm13",
        {
            {"Individualism", "Preference for a loosely knit social framework in which individuals take care of themselves and their immediate families."},
            {"Power Distance", "The extent to which the less powerful members of a society accept and expect that power is distributed unequally."},
            {"Masculinity", "Preference for achievement, heroism, assertiveness, and material rewards for success."},
            {"Indulgence", "Allowing relatively free gratification of basic and natural human drives related to enjoying life and having fun."},
            {"Long Term Orientation", "Fostering virtues oriented toward future rewards, such as perseverance and thrift."},
            {"Uncertainty Avoidance", "The degree to which people feel uncomfortable with uncertainty and ambiguity."},
        });
}

ValueSystem lvi() {
    return ValueSystem(
        "lvi",
        {
            {"Achievement", "It is important to challenge yourself and work hard to improve."},
            {"Belonging", "It is important to be accepted by others and to feel included."},
            {"Concern for the Environment", "It is important to protect and preserve the environment."},
            {"Concern for Others", "The well-being of others is important."},
            {"Creativity", "It is important to have new ideas or to create new things."},
            {"Financial Prosperity", "It is important to be successful at making money or buying property."},
            {"Health and Activity", "It is important to be healthy and physically active."},
            {"Humility", "It is important to be humble and modest about your accomplishments."},
            {"Independence", "It is important to make your own decisions and do things your way."},
            {"Loyalty to Family or Group", "It is important to follow the traditions and expectations of your family or group."},
            {"Privacy", "It is important to have time alone."},
            {"Responsibility", "It is important to be dependable and trustworthy."},
            {"Scientific Understanding", "It is important to use scientific principles to understand and solve problems."},
            {"Spirituality", "It is important to have spiritual beliefs and to believe that you are part of something greater than yourself."},
        });
}

ValueSystem nfcc2000() {
    return ValueSystem(
        "nfcc2000",
        {
            {"Preference for Order and Structure", "Desire for a well-ordered, structured environment with clear rules."},
            {"Preference for Predictability", "Desire for secure, stable knowledge that holds across situations."},
            {"Decisiveness", "Urgency to reach closure quickly when making judgments and decisions."},
            {"Discomfort with Ambiguity", "Aversion to situations that lack closure or contain inconsistent information."},
            {"Closed-Mindedness", "Unwillingness to have one's knowledge challenged by alternative opinions or evidence."},
        });
}

}  // namespace

std::vector<std::string> builtin_system_names() {
    return {"schwartz10", "schwartz4", "vsm13", "lvi", "nfcc2000"};
}

ValueSystem builtin_system(std::string_view name) {
    if (name == "schwartz10") return schwartz10();
    if (name == "schwartz4") return schwartz4();
    if (name == "vsm13") return vsm13();
    if (name == "lvi") return lvi();
    if (name == "nfcc2000") return nfcc2000();
    std::string available;
    for (const auto& n : builtin_system_names()) {
        if (!available.empty()) available += ", ";
        available += n;
    }
    throw ValidationError("unknown value system '" + std::string(name) + "' (available: " + available + ")");
}

}  // namespace gpv
