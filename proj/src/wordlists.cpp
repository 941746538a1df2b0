#include "modnet/wordlists.hpp"

#include <unordered_set>

namespace modnet {

namespace {

const std::unordered_set<std::string>& stop_set() {
    static const std::unordered_set<std::string> kStop = {
        // wh-words
        "what", "where", "when", "who", "whom", "whose", "which", "why", "how",
        // auxiliaries and copulas
        "is", "are", "was", "were", "be", "been", "being", "am", "does", "do", "did", "has",
        "have", "had", "can", "could", "will", "would", "shall", "should", "may", "might", "must",
        // determiners and quantifiers
        "a", "an", "the", "this", "that", "these", "those", "some", "any", "no", "every", "each",
        "all", "both", "few", "many", "much", "most", "several", "other", "another",
        // pronouns
        "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "my",
        "your", "his", "its", "our", "their", "mine", "yours", "theirs", "there", "here",
        "something", "anything", "nothing", "everything", "someone", "anyone", "everyone",
        // prepositions
        "in", "on", "at", "by", "for", "with", "without", "about", "against", "between", "into",
        "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
        "of", "off", "over", "under", "near", "behind", "beside", "around", "across", "along",
        "inside", "outside", "onto", "upon", "within",
        // conjunctions and particles
        "and", "or", "but", "nor", "so", "yet", "if", "because", "while", "than", "as", "not",
        "n't", "'s", "too", "also", "just", "only", "then", "now", "very", "really", "please",
        // very common verbs (surface forms)
        "wear", "wears", "wearing", "worn", "play", "plays", "playing", "played", "make",
        "makes", "making", "made", "get", "gets", "getting", "got", "go", "goes", "going",
        "went", "gone", "come", "comes", "coming", "came", "look", "looks", "looking", "looked",
        "take", "takes", "taking", "took", "taken", "see", "sees", "seeing", "saw", "seen",
        "sit", "sits", "sitting", "sat", "stand", "stands", "standing", "stood", "hold",
        "holds", "holding", "held", "call", "calls", "calling", "called", "fly", "flies",
        "flying", "flew", "flown", "ride", "rides", "riding", "rode", "ridden", "eat", "eats",
        "eating", "ate", "eaten", "walk", "walks", "walking", "walked", "run", "runs",
        "running", "ran", "say", "says", "saying", "said", "know", "knows", "knowing", "knew",
        "known", "think", "thinks", "thinking", "thought", "want", "wants", "wanting",
        "wanted", "use", "uses", "using", "used", "give", "gives", "giving", "gave", "given",
        "tell", "tells", "telling", "told", "work", "works", "working", "worked", "seem",
        "seems", "seeming", "seemed", "feel", "feels", "feeling", "felt", "try", "tries",
        "trying", "tried", "leave", "leaves", "leaving", "left", "show", "shows", "showing",
        "shown", "showed", "appear", "appears", "appearing", "appeared", "doing", "done",
        "happen", "happens", "happening", "happened",
    };
    return kStop;
}

const std::unordered_set<std::string>& noun_set() {
    static const std::unordered_set<std::string> kNouns = {
        "animal",    "apple",    "baby",     "ball",      "banana",   "bathroom", "beach",
        "bear",      "bed",      "bench",    "bicycle",   "bike",     "bird",     "boat",
        "book",      "bottle",   "bowl",     "box",       "boy",      "bread",    "building",
        "bus",       "cake",     "camera",   "car",       "cat",      "chair",    "cheese",
        "chicken",   "child",    "circle",   "city",      "clock",    "cloud",    "coat",
        "color",     "computer", "couch",    "cow",       "cup",      "desk",     "dog",
        "door",      "dress",    "drink",    "elephant",  "face",     "family",   "fence",
        "field",     "fire",     "flag",     "floor",     "flower",   "food",     "fork",
        "frisbee",   "fruit",    "game",     "garden",    "giraffe",  "girl",     "glass",
        "glove",     "grass",    "ground",   "hair",      "hand",     "hat",      "head",
        "helmet",    "horse",    "house",    "jacket",    "kitchen",  "kite",     "knife",
        "lamp",      "laptop",   "light",    "man",       "meat",     "milk",     "mirror",
        "motorcycle", "mountain", "mouse",   "number",    "onion",    "orange",   "oven",
        "painting",  "pan",      "paper",    "park",      "pepper",   "person",   "phone",
        "picture",   "pizza",    "plane",    "plant",     "plate",    "player",   "pot",
        "rain",      "river",    "road",     "rock",      "roof",     "room",     "salad",
        "sandwich",  "scene",    "school",   "sea",       "shape",    "sheep",    "shirt",
        "shoe",      "shop",     "sign",     "sink",      "sky",      "snow",     "sofa",
        "spoon",     "square",   "star",     "station",   "stone",    "street",   "suit",
        "sun",       "table",    "teeth",    "telephone", "tie",      "tile",     "tooth",
        "toothbrush", "topping",  "tower",   "toy",       "traffic",  "train",    "tree",
        "triangle",  "truck",    "umbrella", "vegetable", "wall",     "watch",    "water",
        "window",    "woman",    "word",     "zebra",
    };
    return kNouns;
}

}  // namespace

bool is_stop_or_closed_class(const std::string& token) {
    return stop_set().count(token) > 0;
}

bool is_common_noun(const std::string& token) {
    return noun_set().count(token) > 0;
}

}  // namespace modnet
